import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdcbench.ratings import ML_1M_SCALE, RatingMatrix, save_triples
from rdcbench.rng import make_rng, mix64
from rdcbench.sampler import (
    DegenerateSampleError,
    SamplePlan,
    SamplingBudgetError,
    prune,
    sample_batch,
    sample_one,
)
from rdcbench.synthetic import SyntheticSpec, generate


@pytest.fixture(scope="module")
def parent():
    return generate(SyntheticSpec(n_users=400, n_items=300, density=0.05, seed=3))


def test_mix64_known_values():
    # SplitMix64 outputs for state 0: the first two outputs of the reference generator
    assert mix64(0, 0) == 0xE220A8397B1DCDAF
    assert mix64(0, 1) == 0x6E789E6AA1B965F4


def test_make_rng_rejects_negative():
    with pytest.raises(ValueError):
        make_rng(-1)


def test_dense_parent_cannot_prune(dense_10x10):
    for seed in range(5):
        s = sample_one(dense_10x10, 5, 5, 1, 1, seed)
        assert (s.matrix.m, s.matrix.n, s.matrix.n_ratings) == (5, 5, 25)
        assert s.profile.density == 1.0


def test_isolated_user_is_pruned():
    # user 0 rates only item 0; users 1..4 rate items 1..3 densely
    users = [0] + [u for u in range(1, 5) for _ in range(3)]
    items = [0] + [i for _ in range(1, 5) for i in range(1, 4)]
    parent = RatingMatrix(5, 4, users, items, [3.0] * len(users), ML_1M_SCALE)
    # pick a seed whose selection keeps user 0 but drops item 0
    for seed in range(1000):
        rng = make_rng(seed)
        su = set(rng.choice(5, size=5, replace=False).tolist())
        si = set(rng.choice(4, size=3, replace=False).tolist())
        if 0 not in si:
            break
    s = sample_one(parent, 5, 3, 1, 1, seed)
    assert s.matrix.m == 5 - 1
    assert s.requested_m == 5


def test_deterministic(parent, tmp_path):
    a = sample_one(parent, 150, 120, 1, 1, 99)
    b = sample_one(parent, 150, 120, 1, 1, 99)
    save_triples(a.matrix, tmp_path / "a")
    save_triples(b.matrix, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
    assert a.profile == b.profile and a.sample_seed == b.sample_seed
    c = sample_one(parent, 150, 120, 1, 1, 100)
    assert c.matrix != a.matrix


def test_never_invents_ratings(parent):
    s = sample_one(parent, 200, 150, 2, 2, 5)
    pu, pi = s.matrix.metadata["parent_users"], s.matrix.metadata["parent_items"]
    parent_cells = parent.triple_set()
    for u, i, r in s.matrix.triples():
        assert (int(pu[u]), int(pi[i]), r) in parent_cells


def test_minimums_hold(parent):
    s = sample_one(parent, 200, 150, 3, 4, 11)
    assert np.diff(s.matrix.row_ptr).min() >= 3
    assert np.diff(s.matrix.col_ptr).min() >= 4
    assert s.profile.ipu >= 3 and s.profile.ipi >= 4
    assert s.matrix.m <= 200 and s.matrix.n <= 150


def test_degenerate_sample_reports_seed():
    parent = RatingMatrix(2, 2, [0, 1], [0, 1], [1.0, 2.0], ML_1M_SCALE)
    with pytest.raises(DegenerateSampleError) as e:
        sample_one(parent, 2, 2, 2, 1, 42)
    assert e.value.seed == 42


def test_target_larger_than_parent(dense_10x10):
    with pytest.raises(ValueError):
        sample_one(dense_10x10, 11, 5)


@given(st.integers(0, 2**32), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=150, deadline=None)
def test_pruning_order_independent(seed, min_row, min_col):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 7, size=2)
    mask = rng.random((m, n)) < 0.5
    users, items = np.nonzero(mask)
    a = prune(users, items, m, n, min_row, min_col, users_first=True)
    b = prune(users, items, m, n, min_row, min_col, users_first=False)
    assert np.array_equal(a, b)


def test_pruning_matches_exhaustive_maximal_submatrix():
    # the fixed point is the largest (user set, item set) whose induced ratings meet both minimums
    rng = np.random.default_rng(0)
    for _ in range(60):
        m, n = rng.integers(1, 5, size=2)
        mask = rng.random((m, n)) < 0.55
        users, items = np.nonzero(mask)
        keep = prune(users, items, m, n, 2, 2)
        best = set()
        for ru in range(m + 1):
            for U in itertools.combinations(range(m), ru):
                for ri in range(n + 1):
                    for I in itertools.combinations(range(n), ri):
                        cells = {(u, i) for u, i in zip(users, items) if u in U and i in I}
                        ok = all(sum(1 for c in cells if c[0] == u) >= 2 for u in U) and all(
                            sum(1 for c in cells if c[1] == i) >= 2 for i in I
                        )
                        if ok and len(cells) > len(best):
                            best = cells
        got = {(u, i) for u, i, k in zip(users, items, keep) if k}
        assert got == best


def test_batch(parent):
    plan = SamplePlan(3, (100, 200), (80, 150), master_seed=5)
    batch = sample_batch(parent, plan)
    assert len(batch) == 3
    assert len({s.sample_seed for s in batch}) == 3
    assert [s.index for s in batch] == [0, 1, 2]
    again = sample_batch(parent, plan)
    assert all(a.matrix == b.matrix and a.sample_seed == b.sample_seed for a, b in zip(batch, again))


def test_batch_degenerate_range(parent):
    plan = SamplePlan(4, (100, 100), (100, 100), master_seed=1)
    for s in sample_batch(parent, plan):
        assert s.matrix.m <= 100 and s.matrix.n <= 100
        assert s.requested_m == 100 and s.requested_n == 100


def test_batch_budget_exhausted():
    parent = RatingMatrix(2, 2, [0, 1], [0, 1], [1.0, 2.0], ML_1M_SCALE)
    plan = SamplePlan(2, (2, 2), (2, 2), min_ratings_per_row=2)
    with pytest.raises(SamplingBudgetError):
        sample_batch(parent, plan)


def test_plan_validation(parent):
    with pytest.raises(ValueError):
        SamplePlan(0, (1, 2), (1, 2))
    with pytest.raises(ValueError):
        SamplePlan(1, (3, 2), (1, 2))
    with pytest.raises(ValueError):
        sample_batch(parent, SamplePlan(1, (1, 401), (1, 2)))
