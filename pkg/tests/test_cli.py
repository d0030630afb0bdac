import json

import pytest

from rdcbench import __version__
from rdcbench.cli import main
from rdcbench.experiment import RECORD_FILE, ExperimentRecord, record_line
from rdcbench.ratings import RdcProfile, load_triples
from test_experiment import planted

ML1M = "".join(f"{u}::{i}::{(u * i) % 5 + 1}::97830{u}{i}\n" for u in range(1, 5) for i in range(1, 4))


@pytest.fixture
def ml1m(tmp_path):
    p = tmp_path / "ratings.dat"
    p.write_text(ML1M)
    return p


def write_records(path, records):
    path.write_text(json.dumps({"config_hash": "x", "version": __version__}) + "\n"
                    + "".join(record_line(r) + "\n" for r in records))
    return path


def tiny_config(tmp_path, parent, n_samples=5, **extra):
    lines = {
        "dataset": str(parent), "format": "triples", "n_samples": n_samples,
        "m_min": 30, "m_max": 50, "n_min": 30, "n_max": 50,
        "algorithms": "SlopeOne,UNN", "output_dir": "out", **extra,
    }
    p = tmp_path / "tiny.cfg"
    p.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return p


class TestUsage:
    def test_no_command(self, capsys):
        assert main([]) == 2

    @pytest.mark.parametrize("cmd", [[], ["ingest"], ["generate"], ["run"], ["fit"], ["plot-data"]])
    def test_help(self, cmd, capsys, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(cmd + ["--help"]) == 0
        assert "usage:" in capsys.readouterr().out
        assert list(tmp_path.iterdir()) == []

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_format(self, ml1m, tmp_path, capsys):
        assert main(["ingest", "--input", str(ml1m), "--format", "netflix", "--out", str(tmp_path / "o")]) == 2
        assert "usage:" in capsys.readouterr().err


class TestIngest:
    def test_ml1m(self, ml1m, tmp_path, capsys):
        out = tmp_path / "t.txt"
        assert main(["ingest", "--input", str(ml1m), "--format", "ml-1m", "--out", str(out)]) == 0
        assert "ipu" in capsys.readouterr().out.lower()
        m = load_triples(out)
        assert (m.m, m.n, m.n_ratings) == (4, 3, 12)

    def test_malformed_line_7(self, tmp_path, capsys):
        lines = ML1M.splitlines(keepends=True)
        lines[6] = "7::oops\n"
        p = tmp_path / "bad.dat"
        p.write_text("".join(lines))
        assert main(["ingest", "--input", str(p), "--format", "ml-1m", "--out", str(tmp_path / "o")]) == 1
        assert "line 7" in capsys.readouterr().err

    def test_missing_input(self, tmp_path, capsys):
        assert main(["ingest", "--input", str(tmp_path / "nope"), "--format", "ml-1m", "--out", str(tmp_path / "o")]) == 1

    def test_generate(self, tmp_path):
        out = tmp_path / "g.txt"
        assert main(["--quiet", "generate", "--out", str(out), "--users", "50", "--items", "40", "--density", "0.2"]) == 0
        m = load_triples(out)
        assert (m.m, m.n) == (50, 40)


class TestRun:
    def test_tiny_run_and_resume(self, tmp_path, small_parent, capsys):
        cfg = tiny_config(tmp_path, small_parent)
        assert main(["run", "--config", str(cfg)]) == 0
        captured = capsys.readouterr()
        assert "10 records computed" in captured.out
        assert captured.err.count("sample ") == 10
        lines = (tmp_path / "out" / RECORD_FILE).read_text().splitlines()
        assert len(lines) == 11
        assert main(["run", "--config", str(cfg), "--resume"]) == 0
        assert "0 records computed" in capsys.readouterr().out
        assert main(["run", "--config", str(cfg)]) == 1

        table = tmp_path / "table.txt"
        assert main(["fit", "--records", str(tmp_path / "out" / RECORD_FILE), "--out-table", str(table)]) == 0
        rows = [ln for ln in table.read_text().splitlines() if ln.startswith(("UNN", "Slope-One"))]
        assert len(rows) == 2
        assert set(json.loads((tmp_path / "table.json").read_text())) == {"UNN", "SLOPE_ONE"}

    def test_set_and_seed_report(self, tmp_path, small_parent, capsys):
        cfg = tiny_config(tmp_path, small_parent, n_samples=2)
        args = ["--seed-report", "run", "--config", str(cfg), "--set", "algorithms=SVD", "--set", "SVD.n_epochs=2",
                "--output-dir", str(tmp_path / "other")]
        assert main(args) == 0
        err = capsys.readouterr().err
        assert "split=" in err and "SVD=" in err
        assert len((tmp_path / "other" / RECORD_FILE).read_text().splitlines()) == 3

    def test_missing_dataset(self, tmp_path, capsys):
        cfg = tiny_config(tmp_path, tmp_path / "absent.txt")
        assert main(["run", "--config", str(cfg)]) == 1
        assert "dataset not found" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_bad_config(self, tmp_path, small_parent, capsys):
        cfg = tiny_config(tmp_path, small_parent, bogus=1)
        assert main(["run", "--config", str(cfg)]) == 1
        assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1

    def test_bad_set_syntax(self, tmp_path, small_parent, capsys):
        cfg = tiny_config(tmp_path, small_parent)
        assert main(["run", "--config", str(cfg), "--set", "noequals"]) == 2


class TestFit:
    def coefs(self):
        return {"SVD": (0.9205, 0.0283, 0.118, 0.004), "NMF": (0.8, 0.01, 0.05, -0.002)}

    def test_planted_both_bases(self, tmp_path, capsys):
        from rdcbench.algorithms import AlgorithmId

        coefs = {AlgorithmId(k): v for k, v in self.coefs().items()}
        recs = write_records(tmp_path / "r.jsonl", planted(coefs))
        assert main(["--quiet", "fit", "--records", str(recs), "--out-table", str(tmp_path / "nat.txt")]) == 0
        assert main(["--quiet", "fit", "--records", str(recs), "--log-base", "base10",
                     "--out-table", str(tmp_path / "ten.txt")]) == 0
        nat = json.loads((tmp_path / "nat.json").read_text())
        ten = json.loads((tmp_path / "ten.json").read_text())
        for name, (a0, a1, a2, a3) in self.coefs().items():
            got = nat[name]
            assert abs(got["a0"] - a0) < 1e-8 and abs(got["a1"] - a1) < 1e-8
            assert abs(got["a2"] - a2) < 1e-8 and abs(got["a3"] - a3) < 1e-8
            assert ten[name]["adjusted_r2"] == pytest.approx(got["adjusted_r2"], abs=1e-12)
        assert "log base: 10" in (tmp_path / "ten.txt").read_text()
        assert (tmp_path / "nat.csv").read_text().startswith("method,")

    def test_no_usable_records(self, tmp_path, capsys):
        recs = write_records(tmp_path / "r.jsonl", [])
        assert main(["fit", "--records", str(recs), "--out-table", str(tmp_path / "t.txt")]) == 1


class TestPlotData:
    def records(self, tmp_path):
        from rdcbench.algorithms import AlgorithmId

        recs = [
            ExperimentRecord(k, k, RdcProfile(100, n, 5855), AlgorithmId.SVD, 1.0, 1.0 + 0.01 * k, 5000, 855, 0.0)
            for k, n in enumerate([60, 80, 120, 200])
        ]
        return write_records(tmp_path / "r.jsonl", recs)

    def test_exact_center(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        args = ["plot-data", "--records", str(self.records(tmp_path)), "--hold", "ipu", "--center", "58.55",
                "--tolerance", "0", "--method", "svd", "--out", str(out)]
        assert main(args) == 0
        assert len(out.read_text().splitlines()) == 5
        assert json.loads((tmp_path / "p.fit.json").read_text())["n_points"] == 4

    def test_empty_slice(self, tmp_path, caplog):
        out = tmp_path / "p.csv"
        args = ["plot-data", "--records", str(self.records(tmp_path)), "--hold", "ipi", "--center", "1.0",
                "--method", "SVD", "--out", str(out)]
        assert main(args) == 0
        assert out.read_text() == ""
        assert "empty slice" in caplog.text

    def test_unknown_method(self, tmp_path, capsys):
        args = ["plot-data", "--records", str(self.records(tmp_path)), "--hold", "ipu", "--center", "58.55",
                "--method", "ALS", "--out", str(tmp_path / "p.csv")]
        assert main(args) == 2
        err = capsys.readouterr().err
        assert "SVD" in err and "CO_CLUSTERING" in err

    def test_negative_tolerance(self, tmp_path, capsys):
        args = ["plot-data", "--records", str(self.records(tmp_path)), "--hold", "ipu", "--center", "58.55",
                "--tolerance", "-1", "--method", "SVD", "--out", str(tmp_path / "p.csv")]
        assert main(args) == 2
