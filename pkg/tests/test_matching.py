"""Nearest-neighbor matching with replacement and its bias-corrected form."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from mlte.learners import OutcomeFit
from mlte.matching import METRICS, build_matches, estimate_bcm, estimate_match
from mlte.tabular import Dataset


def outcome_stub(data, fn):
    return OutcomeFit("correct", data.outcome_kind, data.k, "stub", fn, lambda d, s: None)


def random_k3(n=60, p=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    t = rng.integers(1, 4, n)
    t[:6] = [1, 1, 2, 2, 3, 3]
    y = rng.normal(size=n)
    return Dataset.from_arrays(X, t, y)


# ---------------------------------------------------------------------------
# match construction


def test_two_cluster_hand_example():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    data = Dataset.from_arrays(X, [1, 2, 1, 2], [0.0, 1.0, 0.0, 1.0])
    ms = build_matches(data)
    np.testing.assert_array_equal(ms.match_indices[:, 0, 0], [0, 0, 2, 2])
    np.testing.assert_array_equal(ms.match_indices[:, 1, 0], [1, 1, 3, 3])
    np.testing.assert_array_equal(ms.usage_counts[:, 0], [1, 0, 1, 0])
    np.testing.assert_array_equal(ms.usage_counts[:, 1], [0, 1, 0, 1])
    np.testing.assert_array_equal(ms.nn_same, [2, 3, 0, 1])
    est = estimate_match(data, ms, (2, 1))
    assert est.tau_hat == pytest.approx(1.0)
    assert est.variance == pytest.approx(0.0)


def test_tied_donors_resolve_to_lowest_row_index():
    X = np.array([[0.0], [0.0], [5.0], [5.0]])
    data = Dataset.from_arrays(X, [1, 1, 2, 2], [0.0, 0.0, 1.0, 1.0])
    ms = build_matches(data)
    assert ms.match_indices[2, 0, 0] == 0
    assert ms.match_indices[3, 0, 0] == 0
    assert ms.match_indices[0, 1, 0] == 2
    ms2 = build_matches(data, m=2)
    np.testing.assert_array_equal(ms2.match_indices[2, 0], [0, 1])
    np.testing.assert_array_equal(ms2.match_indices[0, 1], [2, 3])


@pytest.mark.parametrize("metric", METRICS)
@pytest.mark.parametrize("m", [1, 3])
def test_match_sets_agree_with_brute_force(metric, m):
    data = random_k3()
    ms = build_matches(data, m=m, metric=metric)
    if metric == "euclidean-standardized":
        Z = data.X / data.X.std(axis=0, ddof=1)
        dist = cdist(Z, Z)
    else:
        S = np.cov(data.X, rowvar=False) + 1e-8 * np.eye(data.X.shape[1])
        dist = cdist(data.X, data.X, metric="mahalanobis", VI=np.linalg.inv(S))
    for lev in (1, 2, 3):
        donors = np.flatnonzero(data.t == lev)
        for i in range(data.n):
            if data.t[i] == lev:
                np.testing.assert_array_equal(ms.match_indices[i, lev - 1], np.full(m, i))
                others = donors[donors != i]
                want_nn = others[np.argmin(dist[i, others])]
                assert ms.nn_same[i] == want_nn
            else:
                want = donors[np.argsort(dist[i, donors], kind="stable")[:m]]
                np.testing.assert_array_equal(np.sort(ms.match_indices[i, lev - 1]), np.sort(want))


def test_usage_counts_total_m_per_query():
    data = random_k3(seed=3)
    for m in (1, 2):
        ms = build_matches(data, m=m)
        for lev in (1, 2, 3):
            queries = int((data.t != lev).sum())
            assert ms.usage_counts[:, lev - 1].sum() == m * queries
            # only rows at the level serve as donors for it
            assert ms.usage_counts[data.t != lev, lev - 1].sum() == 0


def test_estimates_invariant_to_row_permutation():
    data = random_k3(seed=5)
    perm = np.random.default_rng(1).permutation(data.n)
    data2 = Dataset.from_arrays(data.X[perm], data.t[perm], data.y[perm])
    for pair in ((2, 1), (3, 2)):
        a = estimate_match(data, build_matches(data), pair)
        b = estimate_match(data2, build_matches(data2), pair)
        assert a.tau_hat == pytest.approx(b.tau_hat, abs=1e-10)
        assert a.variance == pytest.approx(b.variance, abs=1e-10)


def test_constant_outcome_gives_zero_effect():
    data = random_k3(seed=7)
    flat = Dataset.from_arrays(data.X, data.t, np.full(data.n, 2.0), outcome_kind="continuous")
    ms = build_matches(flat)
    est = estimate_match(flat, ms, (3, 1))
    assert est.tau_hat == 0.0
    assert est.variance == 0.0


def test_level_size_requirements():
    X = np.random.default_rng(0).normal(size=(10, 2))
    t = np.full(10, 1)
    t[-1] = 2
    data = Dataset.from_arrays(X, t, np.zeros(10))
    with pytest.raises(ValueError):
        build_matches(data)
    t[-2] = 2
    data2 = Dataset.from_arrays(X, t, np.zeros(10))
    build_matches(data2)  # two rows per level suffice for m=1
    with pytest.raises(ValueError):
        build_matches(data2, m=3)
    with pytest.raises(ValueError):
        build_matches(data2, m=0)
    with pytest.raises(ValueError):
        build_matches(data2, metric="cosine")


# ---------------------------------------------------------------------------
# bias correction


def test_bcm_equals_match_when_predictions_are_level_constants():
    data = random_k3(seed=11)
    ms = build_matches(data)
    out = outcome_stub(data, lambda level, X: np.full(X.shape[0], [4.0, -2.0, 0.5][level - 1]))
    for pair in ((2, 1), (3, 1), (3, 2)):
        plain = estimate_match(data, ms, pair)
        corrected = estimate_bcm(data, ms, out, pair)
        assert corrected.tau_hat == pytest.approx(plain.tau_hat, abs=1e-12)
        assert corrected.variance == pytest.approx(plain.variance, abs=1e-12)


def test_bcm_exact_on_noiseless_linear_outcome():
    rng = np.random.default_rng(13)
    n = 90
    X = rng.normal(size=(n, 2))
    t = rng.integers(1, 4, n)
    t[:6] = [1, 1, 2, 2, 3, 3]
    shift = np.array([0.0, 1.5, 2.5])
    y = 1.0 + 2.0 * X[:, 0] - X[:, 1] + shift[t - 1]
    data = Dataset.from_arrays(X, t, y)
    out = outcome_stub(
        data, lambda level, X: 1.0 + 2.0 * X[:, 0] - X[:, 1] + shift[level - 1]
    )
    ms = build_matches(data)
    assert estimate_bcm(data, ms, out, (2, 1)).tau_hat == pytest.approx(1.5, abs=1e-10)
    assert estimate_bcm(data, ms, out, (3, 1)).tau_hat == pytest.approx(2.5, abs=1e-10)
    assert estimate_bcm(data, ms, out, (3, 2)).tau_hat == pytest.approx(1.0, abs=1e-10)
    # raw matching is not exact here, so the correction is doing the work
    assert abs(estimate_match(data, ms, (2, 1)).tau_hat - 1.5) > 1e-6


def test_match_sets_are_read_only():
    data = random_k3(seed=17)
    ms = build_matches(data)
    with pytest.raises(ValueError):
        ms.usage_counts[0, 0] = 5
