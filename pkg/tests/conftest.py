import numpy as np
import pytest

from rdcbench.ratings import ML_1M_SCALE, RatingMatrix


def random_matrix(rng, max_m=6, max_n=6, density=0.6, scale=ML_1M_SCALE, allow_empty=False, min_m=1, min_n=1):
    """Small random matrix on an integer 1..5 grid; empty rows/cols pruned unless allowed."""
    while True:
        m = int(rng.integers(min_m, max_m + 1))
        n = int(rng.integers(min_n, max_n + 1))
        mask = rng.random((m, n)) < density
        if not mask.any():
            continue
        if not allow_empty:
            mask = mask[mask.any(axis=1)][:, mask.any(axis=0)]
        users, items = np.nonzero(mask)
        values = rng.integers(1, 6, size=len(users)).astype(float)
        return RatingMatrix(mask.shape[0], mask.shape[1], users, items, values, scale, allow_empty=allow_empty)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def dense_10x10():
    u, i = np.meshgrid(np.arange(10), np.arange(10), indexing="ij")
    vals = 1.0 + (u + 2 * i).ravel() % 5
    return RatingMatrix(10, 10, u.ravel(), i.ravel(), vals, ML_1M_SCALE)


def comparable_records(path):
    """Sorted record lines without the wall-clock ``fit_seconds`` field."""
    import json

    out = []
    with open(path, encoding="utf-8") as f:
        next(f)
        for line in f:
            d = json.loads(line)
            d.pop("fit_seconds")
            out.append(json.dumps(d, sort_keys=True))
    return sorted(out)


@pytest.fixture(scope="session")
def small_parent(tmp_path_factory):
    """A 120 x 120 synthetic parent matrix saved as a triple file."""
    from rdcbench.ratings import save_triples
    from rdcbench.synthetic import SyntheticSpec, generate

    path = tmp_path_factory.mktemp("parent") / "parent.txt"
    save_triples(generate(SyntheticSpec(n_users=120, n_items=120, density=0.15, seed=3)), path)
    return path


# --- acceptance summary ------------------------------------------------------
#
# Tests in test_acceptance.py are named test_criterion_NN_<slug>; each gets one
# PASS/FAIL line in the terminal summary, with any "detail" user property.

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[1]
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    if report.failed:
        _acceptance[name] = ("FAIL", detail)
    elif report.when == "call" and name not in _acceptance:
        _acceptance[name] = ("PASS", detail)
    elif report.skipped:
        _acceptance[name] = ("SKIP", detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status, detail = _acceptance[name]
        _, _, num, *slug = name.split("_")
        line = f"criterion {int(num):2d} {' '.join(slug):<34s} {status}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
