import json

import numpy as np
import pytest

from dynmetric.classifier import EvaluationReport, cross_validate, evaluate, knn_predict
from dynmetric.dataset import Dataset, generate_synthetic
from dynmetric.errors import ClassTooSmall, DimensionMismatch, InputError
from dynmetric.metric import MahalanobisMetric
from dynmetric.solver import SolverConfig

from oracles import brute_knn, random_pd

I1 = MahalanobisMetric.identity(1)


@pytest.fixture
def three():
    return Dataset([[0.0], [1.0], [10.0]], list("AAB"))


class TestKnnPredict:
    def test_nearest(self, three):
        assert knn_predict(three, I1, [0.4], k=1) == "A"

    def test_majority(self, three):
        assert knn_predict(three, I1, [0.4], k=3) == "A"

    def test_vote_tie_by_label_order(self):
        assert knn_predict(Dataset([[0.0], [2.0]], ["A", "B"]), I1, [1.0], k=2) == "A"

    def test_vote_tie_by_summed_distance(self):
        # one vote each; B is closer (0.81 vs 1.21) so it wins despite label order
        ds = Dataset([[0.0], [2.0]], ["B", "A"])
        assert knn_predict(ds, I1, [0.9], k=2) == "B"

    def test_cutoff_tie_by_index(self):
        ds = Dataset([[-1.0], [1.0]], ["B", "A"])
        assert knn_predict(ds, I1, [0.0], k=1) == "B"

    def test_errors(self, three):
        with pytest.raises(DimensionMismatch):
            knn_predict(three, I1, [0.0, 1.0], k=1)
        with pytest.raises(InputError):
            knn_predict(three, I1, [0.0], k=4)
        with pytest.raises(DimensionMismatch):
            knn_predict(three, MahalanobisMetric.identity(2), [0.0], k=1)

    def test_self_label_and_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n, d = int(rng.integers(3, 25)), int(rng.integers(1, 6))
            X = rng.standard_normal((n, d))
            y = [f"c{v}" for v in rng.integers(0, 3, n)]
            ds = Dataset(X, y)
            A = random_pd(rng, d)
            M = MahalanobisMetric(A)
            for i in range(n):
                assert knn_predict(ds, M, X[i], 1) == y[i]
            for _ in range(5):
                q = rng.standard_normal(d)
                k = int(rng.integers(1, n + 1))
                assert knn_predict(ds, M, q, k) == brute_knn(X, y, A, q, k)

    def test_scale_invariance(self):
        rng = np.random.default_rng(1)
        ds = Dataset(rng.standard_normal((30, 4)), [f"c{v}" for v in rng.integers(0, 4, 30)])
        A = random_pd(rng, 4)
        for c in (1e-3, 0.37, 5.0, 1e4):
            for _ in range(10):
                q = rng.standard_normal(4)
                for k in (1, 3, 5):
                    assert knn_predict(ds, MahalanobisMetric(A), q, k) == knn_predict(
                        ds, MahalanobisMetric(c * A), q, k
                    )


class TestEvaluate:
    def test_self_match(self):
        ds = generate_synthetic(3, 5, 4, 2, 1.0, 1.0, seed=0)
        assert evaluate(ds, ds, MahalanobisMetric.identity(4), [1]) == {1: 100.0}

    def test_separated(self):
        rng = np.random.default_rng(0)
        train = Dataset(np.r_[rng.normal(0, 0.1, (5, 2)), rng.normal(10, 0.1, (5, 2))], list("AAAAABBBBB"))
        test = Dataset([[0.05, 0.0], [10.1, 9.9]], ["A", "B"])
        acc = evaluate(train, test, MahalanobisMetric.identity(2), [1, 3, 5])
        assert acc == {1: 100.0, 3: 100.0, 5: 100.0}

    def test_chance_level(self):
        rng = np.random.default_rng(42)
        X = rng.standard_normal((200, 5))
        y = np.array(["A", "B"] * 100)
        y_perm = rng.permutation(y)
        train, test = Dataset(X[:100], y_perm[:100]), Dataset(X[100:], y_perm[100:])
        acc = evaluate(train, test, MahalanobisMetric.identity(5), [1])[1]
        assert 35 <= acc <= 65

    def test_deterministic(self):
        ds = generate_synthetic(4, 6, 5, 2, 1.0, 1.0, seed=3)
        M = MahalanobisMetric(random_pd(np.random.default_rng(0), 5))
        assert evaluate(ds, ds, M, [1, 3]) == evaluate(ds, ds, M, [1, 3])

    def test_empty_ks(self, three):
        with pytest.raises(InputError):
            evaluate(three, three, I1, [])


class TestCrossValidate:
    def test_zero_cycles_equals_baseline(self):
        ds = generate_synthetic(5, 6, 6, 2, 1.5, 1.0, seed=1)
        r = cross_validate(ds, SolverConfig(cycles=0), ks=range(1, 6), folds=3, seed=0)
        assert r.learned == r.baseline

    def test_well_separated(self):
        ds = generate_synthetic(2, 9, 4, 4, 10.0, 1.0, seed=0)
        r = cross_validate(ds, SolverConfig(), ks=[1], folds=3, seed=0)
        assert r.mean(1) == 100.0 and r.mean(1, "baseline") == 100.0

    def test_shape_and_json(self):
        ds = generate_synthetic(4, 6, 5, 2, 2.0, 1.0, seed=2)
        r = cross_validate(ds, SolverConfig(cycles=1), ks=[1, 2, 3, 4, 5], folds=3, seed=0)
        assert sum(len(v) for v in r.learned.values()) == 15
        assert sum(len(v) for v in r.baseline.values()) == 15
        assert len(r.train_time_ms) == 3
        for v in list(r.learned.values()) + list(r.baseline.values()):
            assert all(0 <= a <= 100 for a in v)
        doc = json.loads(r.to_json())
        assert set(doc) >= {"learned", "baseline", "timing", "config"}
        assert "timing" not in json.loads(r.to_json(timing=False))

    def test_no_leakage(self, monkeypatch):
        import dynmetric.classifier as C

        ds = generate_synthetic(3, 6, 3, 2, 2.0, 1.0, seed=3)
        seen = []
        real = C.train

        def spy(tr, cfg):
            seen.append({tuple(x) for x in tr.X})
            return real(tr, cfg)

        monkeypatch.setattr(C, "train", spy)
        from dynmetric.dataset import stratified_kfold

        cross_validate(ds, SolverConfig(cycles=1), ks=[1], folds=3, seed=5)
        for rows, (_, test_idx) in zip(seen, stratified_kfold(ds, 3, 5)):
            assert not rows & {tuple(x) for x in ds.X[test_idx]}

    def test_reproducible(self):
        ds = generate_synthetic(4, 6, 5, 2, 2.0, 1.0, seed=4)
        a = cross_validate(ds, SolverConfig(seed=1), ks=[1, 3], folds=3, seed=9)
        b = cross_validate(ds, SolverConfig(seed=1), ks=[1, 3], folds=3, seed=9)
        assert a.to_json(timing=False) == b.to_json(timing=False)
        assert a.table() == b.table()

    def test_class_too_small(self):
        ds = generate_synthetic(3, 4, 3, 2, 2.0, 1.0, seed=0)
        with pytest.raises(ClassTooSmall):
            cross_validate(ds, SolverConfig(), folds=10)

    def test_standardize_folds(self):
        ds = generate_synthetic(3, 6, 3, 2, 2.0, 1.0, seed=6)
        ds = Dataset(ds.X * [1.0, 100.0, 0.01], ds.labels)
        r = cross_validate(ds, SolverConfig(cycles=0), ks=[1], folds=3, seed=0, standardize_folds=True)
        assert r.config["standardize"] is True


def test_table_layout():
    r = EvaluationReport(
        ks=[1, 2],
        folds=2,
        learned={1: [98.0, 99.48], 2: [100.0, 97.0]},
        baseline={1: [95.37, 95.37], 2: [95.37, 95.37]},
    )
    lines = r.table().splitlines()
    assert lines[0].split() == ["k=1", "k=2"]
    assert lines[1].startswith("Euclidean distance")
    assert lines[1].split()[-2:] == ["95.37", "95.37"]
    assert lines[2].startswith("Ours")
    assert lines[2].split()[-2:] == ["98.74", "98.50"]
