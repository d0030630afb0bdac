"""
Command-line entry point.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .algorithms import ALL_ALGORITHMS, AlgorithmId
from .config import ConfigError, load_config
from .experiment import (
    ExperimentError,
    ExperimentRecord,
    algorithm_seed,
    emit_plot_data,
    fit_all,
    load_records,
    run,
    slice_constant,
    split_seed,
    usable,
)
from .ratings import FORMATS, RatingDataError, RatingScale, load_dataset, rdc_profile, save_triples
from .regression import LOG_BASES
from .report import render_csv, render_json, render_text
from .sampler import iter_samples
from .synthetic import SyntheticSpec, generate

_log = logging.getLogger("rdcbench")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


def _method(name: str) -> str:
    try:
        return AlgorithmId.parse(name).value
    except ValueError:
        return name


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rdcbench",
        description="Benchmark collaborative filtering against ratings per user and per item.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed-report", action="store_true", help="print every derived seed")
    p.add_argument("--quiet", action="store_true", help="suppress progress and informational output")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("ingest", help="convert a dataset to the canonical triple file")
    s.add_argument("--input", required=True)
    s.add_argument("--format", required=True, choices=FORMATS)
    s.add_argument("--out", required=True)
    s.add_argument("--scale", help="rating scale 'min,max,step' (default: per format)")

    s = sub.add_parser("generate", help="write a synthetic parent matrix as a triple file")
    s.add_argument("--out", required=True)
    s.add_argument("--users", type=int, default=SyntheticSpec.n_users)
    s.add_argument("--items", type=int, default=SyntheticSpec.n_items)
    s.add_argument("--density", type=float, default=SyntheticSpec.density)
    s.add_argument("--rank", type=int, default=SyntheticSpec.rank)
    s.add_argument("--noise", type=float, default=SyntheticSpec.noise_std)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("run", help="sample matrices and evaluate algorithms")
    s.add_argument("--config", required=True)
    s.add_argument("--resume", action="store_true", help="skip records already in the output file")
    s.add_argument("--workers", type=int)
    s.add_argument("--output-dir")
    s.add_argument("--set", dest="sets", action="append", type=_key_value, default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")

    s = sub.add_parser("fit", help="fit the performance model per method and write the table")
    s.add_argument("--records", required=True)
    s.add_argument("--log-base", choices=LOG_BASES, default="natural")
    s.add_argument("--out-table", required=True, help="text table path; .csv and .json are written beside it")

    s = sub.add_parser("plot-data", help="performance vs log of one characteristic at a constant other")
    s.add_argument("--records", required=True)
    s.add_argument("--hold", required=True, choices=("ipu", "ipi"), type=str.lower)
    s.add_argument("--center", required=True, type=float)
    s.add_argument("--tolerance", type=float, default=0.02)
    s.add_argument("--method", required=True, type=_method, choices=[a.value for a in ALL_ALGORITHMS])
    s.add_argument("--log-base", choices=LOG_BASES, default="natural")
    s.add_argument("--out", required=True)
    return p


def _info(args, msg: str):
    if not args.quiet:
        print(msg)


def cmd_ingest(args) -> int:
    scale = RatingScale.parse(args.scale) if args.scale else None
    matrix = load_dataset(args.input, args.format, scale)
    save_triples(matrix, args.out)
    _info(args, str(rdc_profile(matrix)))
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        n_users=args.users, n_items=args.items, density=args.density, rank=args.rank,
        noise_std=args.noise, seed=args.seed,
    )
    matrix = generate(spec)
    save_triples(matrix, args.out)
    _info(args, str(rdc_profile(matrix)))
    return EXIT_OK


def cmd_run(args) -> int:
    overrides = dict(args.sets)
    if args.workers is not None:
        overrides["workers"] = str(args.workers)
    if args.output_dir is not None:
        overrides["output_dir"] = str(Path(args.output_dir).resolve())
    config = load_config(args.config, overrides)
    if not Path(config.dataset).is_file():
        raise ExperimentError(f"dataset not found: {config.dataset}")
    parent = load_dataset(config.dataset, config.format, config.scale)

    if args.seed_report:
        for s in iter_samples(parent, config.plan):
            seeds = " ".join(
                f"{a.value}={algorithm_seed(s.sample_seed, a, getattr(config.hyperparams(a), 'rng_seed', 0))}"
                for a in config.algorithms
                if hasattr(config.hyperparams(a), "rng_seed")
            )
            print(
                f"sample {s.index} attempt {s.attempt} seed={s.sample_seed} "
                f"split={split_seed(s.sample_seed)} {seeds}".rstrip(),
                file=sys.stderr,
            )

    def progress(r: ExperimentRecord):
        if not args.quiet:
            print(
                f"sample {r.sample_index} {r.algorithm.value}: rmse={r.rmse:.5f} "
                f"IpU={r.ipu:.3f} IpI={r.ipi:.3f}",
                file=sys.stderr,
            )

    summary = run(config, resume=args.resume, progress=progress, parent=parent)
    print(f"{summary.computed} records computed, {summary.skipped} already present, {summary.failed} failed")
    print(f"records: {summary.path}")
    return EXIT_OK


def _fit_outputs(out_table: str) -> tuple[Path, Path, Path]:
    p = Path(out_table)
    stem = p.with_suffix("") if p.suffix in (".txt", ".csv", ".json") else p
    text = p if p.suffix == ".txt" else stem.with_name(stem.name + ".txt")
    return text, stem.with_name(stem.name + ".csv"), stem.with_name(stem.name + ".json")


def cmd_fit(args) -> int:
    records = load_records(args.records)
    fits = fit_all(records, args.log_base)
    if not fits:
        raise ExperimentError("no method has enough usable records to fit")
    text = render_text(fits, title=f"Regression of performance on log(IpU), log(IpI) ({args.records})")
    text_path, csv_path, json_path = _fit_outputs(args.out_table)
    text_path.write_text(text, encoding="utf-8")
    csv_path.write_text(render_csv(fits), encoding="utf-8")
    json_path.write_text(render_json(fits), encoding="utf-8")
    _info(args, text.rstrip())
    return EXIT_OK


def cmd_plot_data(args) -> int:
    if args.tolerance < 0:
        print("error: --tolerance must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    records = load_records(args.records)
    alg = AlgorithmId(args.method)
    sl = slice_constant([r for r in records if r.algorithm == alg], args.hold, args.center, args.tolerance)
    if not usable(sl.members):
        _log.warning("empty slice: no %s records with %s within %g +- %g%%",
                     alg.value, args.hold, args.center, 100 * args.tolerance)
        Path(args.out).write_text("", encoding="utf-8")
        return EXIT_OK
    data = emit_plot_data(sl, alg, out=args.out, log_base=args.log_base)
    msg = f"{len(data.x)} points written to {args.out}"
    if data.line:
        msg += f"; line slope={data.line['slope']:.6g} r2={data.line['r2']:.4f}"
    _info(args, msg)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "generate": cmd_generate,
    "run": cmd_run,
    "fit": cmd_fit,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except (RatingDataError, ConfigError, ExperimentError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
