"""Text and CSV renderings of per-method regression fits."""

from __future__ import annotations

import csv
import io
import json

from .algorithms import AlgorithmId
from .regression import RegressionFit

COLUMNS = ("method", "coef log(IpU)", "coef log(IpI)", "coef log(IpU)*log(IpI)", "constant", "adjusted R2")

DISPLAY_NAMES = {
    AlgorithmId.UNN: "UNN",
    AlgorithmId.INN: "INN",
    AlgorithmId.SVD: "SVD",
    AlgorithmId.SVD_B: "SVD_b",
    AlgorithmId.CO_CLUSTERING: "CoClustering",
    AlgorithmId.SLOPE_ONE: "Slope-One",
    AlgorithmId.NMF: "NMF",
}
# fixed row order of the regression table
TABLE_ORDER = (
    AlgorithmId.UNN, AlgorithmId.INN, AlgorithmId.SVD, AlgorithmId.SVD_B,
    AlgorithmId.CO_CLUSTERING, AlgorithmId.SLOPE_ONE, AlgorithmId.NMF,
)


def _rows(fits: dict[AlgorithmId, RegressionFit]):
    for alg in TABLE_ORDER:
        if alg in fits:
            f = fits[alg]
            yield alg, (DISPLAY_NAMES[alg], f.a1, f.a2, f.a3, f.a0, f.adjusted_r2)


def render_text(fits: dict[AlgorithmId, RegressionFit], title: str = "", alpha: float = 0.01) -> str:
    out = io.StringIO()
    if title:
        out.write(title + "\n")
    base = next(iter(fits.values())).log_base if fits else "natural"
    out.write(f"log base: {'e (natural)' if base == 'natural' else '10'}\n")
    widths = (14, 15, 15, 24, 11, 12)
    out.write("".join(c.ljust(w) for c, w in zip(COLUMNS, widths)).rstrip() + "\n")
    flagged = []
    for alg, row in _rows(fits):
        cells = [row[0]] + [f"{v:.4g}" for v in row[1:5]] + [f"{row[5]:.2f}"]
        out.write("".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip() + "\n")
        if not fits[alg].all_significant(alpha):
            flagged.append(row[0])
    if flagged:
        out.write(f"p-value >= {alpha} for at least one coefficient: {', '.join(flagged)}\n")
    else:
        out.write(f"all coefficients have p-value < {alpha}\n")
    out.write("note: adjusted R2 can be negative for fits worse than the mean\n")
    return out.getvalue()


def render_csv(fits: dict[AlgorithmId, RegressionFit]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS + ("log_base", "n_points", "max_p_value"))
    for alg, row in _rows(fits):
        f = fits[alg]
        w.writerow([row[0], *(repr(v) for v in row[1:]), f.log_base, f.n_points, repr(max(f.p_values))])
    return out.getvalue()


def render_json(fits: dict[AlgorithmId, RegressionFit]) -> str:
    return json.dumps({alg.value: f.as_dict() for alg, f in fits.items()}, indent=2) + "\n"
