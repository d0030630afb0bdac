import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_matrix
from rdcbench.algorithms import AlgorithmId, fit
from rdcbench.evaluation import PERFECT, SplitSpec, evaluate, performance, rmse, split
from rdcbench.ratings import ML_1M_SCALE, RatingMatrix, Triples


class Constant:
    """Stand-in model predicting fixed values in test order."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def predict_many(self, users, items, clip=True):
        return self.values[: len(users)]


def ten_ratings():
    return RatingMatrix(2, 5, [0] * 5 + [1] * 5, list(range(5)) * 2, [1.0, 2, 3, 4, 5] * 2, ML_1M_SCALE)


class TestSplit:
    def test_rounding(self):
        train, test = split(ten_ratings(), SplitSpec(0.2, seed=1))
        assert len(test) == 2 and train.n_ratings == 8

    def test_half_rounds_up(self):
        train, test = split(ten_ratings(), SplitSpec(0.25, seed=1))
        assert len(test) == 3

    def test_empty_train(self):
        with pytest.raises(ValueError, match="empty train"):
            split(ten_ratings(), SplitSpec(0.999))

    def test_empty_test(self):
        with pytest.raises(ValueError, match="empty test"):
            split(ten_ratings(), SplitSpec(0.01))

    def test_bad_fraction(self):
        for f in (0.0, 1.0, -0.1):
            with pytest.raises(ValueError):
                SplitSpec(f)

    def test_deterministic(self):
        m = ten_ratings()
        a, b = split(m, SplitSpec(0.3, 9)), split(m, SplitSpec(0.3, 9))
        assert a[0] == b[0]
        assert np.array_equal(a[1].users, b[1].users) and np.array_equal(a[1].items, b[1].items)

    def test_keeps_index_space(self):
        m = RatingMatrix(3, 3, [0, 1, 2], [0, 1, 2], [1.0, 2.0, 3.0], ML_1M_SCALE)
        train, test = split(m, SplitSpec(0.34, 0))
        assert (train.m, train.n) == (3, 3)
        assert train.n_ratings == 2 and len(test) == 1

    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
    @settings(max_examples=80, deadline=None)
    def test_partition(self, seed, frac):
        rng = np.random.default_rng(seed)
        m = random_matrix(rng, 8, 8, min_m=2)
        n_test = math.floor(frac * m.n_ratings + 0.5)
        if n_test in (0, m.n_ratings):
            return
        train, test = split(m, SplitSpec(frac, seed))
        tr = train.triple_set()
        te = {(int(u), int(i), float(v)) for u, i, v in zip(test.users, test.items, test.values)}
        assert len(te) == len(test) == n_test
        assert not tr & te
        assert tr | te == m.triple_set()
        order = np.lexsort((test.items, test.users))
        assert np.array_equal(order, np.arange(len(test)))


class TestRmse:
    def test_exact(self):
        assert rmse(Constant([4.0, 1.0]), [(0, 0, 4.0), (0, 1, 1.0)]) == 0.0

    def test_unit(self):
        assert rmse(Constant([3.0, 2.0]), [(0, 0, 4.0), (0, 1, 1.0)]) == 1.0

    def test_mixed(self):
        got = rmse(Constant([3.0, 5.0]), [(0, 0, 4.0), (0, 1, 1.0)])
        assert got == pytest.approx(2.91547595, abs=1e-8)
        assert got == math.sqrt(8.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            rmse(Constant([]), Triples.from_sequence([]))

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=30))
    def test_non_negative_and_zero_iff_exact(self, pairs):
        pred = [p for p, _ in pairs]
        truth = [t for _, t in pairs]
        test = [(0, k, t) for k, t in enumerate(truth)]
        r = rmse(Constant(pred), test)
        assert r >= 0
        assert (r == 0) == all(p == t for p, t in pairs)

    def test_order_independent(self):
        rng = np.random.default_rng(3)
        pred, truth = rng.normal(size=500), rng.normal(size=500)
        perm = rng.permutation(500)
        test = [(0, k, t) for k, t in enumerate(truth)]
        test_p = [(0, k, truth[j]) for k, j in enumerate(perm)]
        assert rmse(Constant(pred), test) == rmse(Constant(pred[perm]), test_p)


class TestPerformance:
    def test_inverse(self):
        assert performance(2.0) == 0.5

    def test_perfect(self):
        assert performance(0.0) is PERFECT
        assert repr(PERFECT) == "PERFECT"

    def test_negative(self):
        with pytest.raises(ValueError):
            performance(-1.0)

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_strictly_decreasing(self, a, b):
        if a < b:
            assert performance(a) > performance(b)


class TestEvaluate:
    def test_additive_matrix_slope_one(self):
        a = np.linspace(1.0, 2.0, 12)
        b = np.linspace(0.0, 2.5, 12)
        u, i = np.meshgrid(np.arange(12), np.arange(12), indexing="ij")
        m = RatingMatrix(12, 12, u.ravel(), i.ravel(), (a[u] + b[i]).ravel(), ML_1M_SCALE)
        res = evaluate(AlgorithmId.SLOPE_ONE, None, m, SplitSpec(0.05, seed=4))
        assert res.rmse < 1e-9
        assert res.n_test == 7 and res.n_train == 137

    def test_single_training_rating(self):
        m = RatingMatrix(1, 2, [0, 0], [0, 1], [2.0, 4.0], ML_1M_SCALE)
        for seed in range(4):
            train, test = split(m, SplitSpec(0.5, seed))
            model = fit(AlgorithmId.UNN, None, train)
            assert model.global_mean == train.values[0]
            res = evaluate(AlgorithmId.UNN, None, m, SplitSpec(0.5, seed))
            assert res.rmse == 2.0 and res.performance == 0.5

    def test_result_fields(self, rng):
        m = random_matrix(rng, 10, 10, density=0.5)
        res = evaluate(AlgorithmId.SVD, None, m, SplitSpec(0.2, 11))
        assert res.algorithm is AlgorithmId.SVD and res.split_seed == 11
        assert res.n_train + res.n_test == m.n_ratings
        assert res.fit_seconds >= 0
        assert res.performance == pytest.approx(1 / res.rmse)
        assert res.as_dict()["algorithm"] == "SVD"

    def test_deterministic(self, rng):
        m = random_matrix(rng, 10, 10, density=0.5)
        for alg in (AlgorithmId.SVD_B, AlgorithmId.CO_CLUSTERING):
            a = evaluate(alg, None, m, SplitSpec(0.2, 5))
            b = evaluate(alg, None, m, SplitSpec(0.2, 5))
            assert a.rmse == b.rmse
