"""Outcome and propensity model regimes, including the stacked learner."""

import numpy as np
import pytest

from mlte.learners import (
    fit_outcome,
    fit_propensity,
    fit_super_learner,
    _additive_spline_spec,
    _mainterms_spec,
    _rich_parametric_spec,
)
from mlte.simengine import (
    ScenarioConfig,
    simulate_dataset,
    treatment_probabilities,
    truth_outcome_spec,
    truth_propensity_spec,
)
from mlte.tabular import Dataset


def scenario_data(scenario="t-y-", n=800, seed=0, rep=0, regime="correct"):
    cfg = ScenarioConfig.named(scenario, n=n, reps=1, seed=seed, regime=regime)
    return cfg, simulate_dataset(cfg, rep)


# ---------------------------------------------------------------------------
# outcome fits


def test_correct_outcome_recovers_noiseless_coefficients():
    rng = np.random.default_rng(1)
    n = 500
    X = np.column_stack([rng.normal(size=n), rng.normal(size=n), (rng.random(n) < 0.5).astype(float)])
    t = np.tile([1, 2, 3], n // 3 + 1)[:n]
    # exactly the truth-spec functional form, no noise
    y = 0.3 + 0.5 * X[:, 0] - 0.2 * X[:, 1] + 0.7 * X[:, 2] + 0.4 * X[:, 1] * X[:, 2] + 0.1 * X[:, 1] ** 2
    y = y + 1.0 * (t == 2) + 1.5 * (t == 3)
    data = Dataset.from_arrays(X, t, y, columns=("x1", "x2", "x3"))
    fit = fit_outcome(data, "correct", truth_spec=truth_outcome_spec())
    np.testing.assert_allclose(fit.predict_matrix(X)[np.arange(n), t - 1], y, atol=1e-8)


def test_outcome_counterfactual_switches_treatment():
    _, data = scenario_data()
    fit = fit_outcome(data, "correct", truth_spec=truth_outcome_spec())
    m2 = fit.predict(2, data.X)
    m3 = fit.predict(3, data.X)
    # additive effects: level contrast constant across covariates
    diff = m3 - m2
    np.testing.assert_allclose(diff, diff[0], atol=1e-8)


def test_correct_outcome_requires_truth_spec():
    _, data = scenario_data()
    with pytest.raises(ValueError):
        fit_outcome(data, "correct")


def test_mainterms_outcome_predicts_finite():
    _, data = scenario_data()
    fit = fit_outcome(data, "mainterms")
    M = fit.predict_matrix(data.X)
    assert M.shape == (data.n, 3)
    assert np.all(np.isfinite(M))


def test_outcome_predict_rejects_bad_level():
    _, data = scenario_data()
    fit = fit_outcome(data, "mainterms")
    with pytest.raises(ValueError):
        fit.predict(4, data.X)


def test_binary_outcome_predictions_are_probabilities():
    rng = np.random.default_rng(4)
    n = 400
    X = rng.normal(size=(n, 2))
    t = np.tile([1, 2], n // 2)
    y = (rng.random(n) < 0.3 + 0.4 * (t == 2)).astype(float)
    data = Dataset.from_arrays(X, t, y)
    fit = fit_outcome(data, "mainterms")
    M = fit.predict_matrix(X)
    assert M.min() >= 0.0 and M.max() <= 1.0


# ---------------------------------------------------------------------------
# super learner


def test_super_learner_weights_on_simplex():
    _, data = scenario_data(n=600, seed=5)
    fit = fit_outcome(data, "ml", seed=11)
    sl = fit.super_learner
    w = np.asarray(sl.weights)
    assert np.all(w >= -1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-8)
    assert len(sl.cv_risks) == len(w)


def test_super_learner_prefers_correct_candidate_family():
    # linear truth: the main-terms candidate should carry most weight
    rng = np.random.default_rng(6)
    n = 900
    X = rng.normal(size=(n, 2))
    t = np.tile([1, 2, 3], n // 3)
    y = 1.0 + 0.8 * X[:, 0] - 0.5 * X[:, 1] + 0.7 * (t == 2) + 1.1 * (t == 3) + 0.05 * rng.normal(size=n)
    data = Dataset.from_arrays(X, t, y)
    candidates = (
        _mainterms_spec(data, with_dummies=True),
        _rich_parametric_spec(data, with_dummies=True),
        _additive_spline_spec(data, with_dummies=True),
    )
    sl = fit_super_learner(data, candidates, seed=3)
    assert np.asarray(sl.weights).argmax() == 0


def test_super_learner_seed_reproducible():
    _, data = scenario_data(n=500, seed=7)
    f1 = fit_outcome(data, "ml", seed=42)
    f2 = fit_outcome(data, "ml", seed=42)
    np.testing.assert_array_equal(f1.predict_matrix(data.X), f2.predict_matrix(data.X))
    np.testing.assert_array_equal(np.asarray(f1.super_learner.weights), np.asarray(f2.super_learner.weights))


def test_outcome_refit_runs_full_pipeline():
    _, data = scenario_data(n=400, seed=8)
    fit = fit_outcome(data, "ml", seed=1)
    rng = np.random.default_rng(2)
    boot = data.take(rng.integers(0, data.n, data.n))
    refit = fit.refit(boot, seed=9)
    assert refit.regime == "ml"
    assert np.all(np.isfinite(refit.predict_matrix(data.X)))


# ---------------------------------------------------------------------------
# propensity fits


def test_correct_propensity_consistent_on_large_sample():
    cfg, data = scenario_data(n=60000, seed=9)
    fit = fit_propensity(data, "correct", truth_spec=truth_propensity_spec())
    truth = treatment_probabilities(cfg.beta, data.X)
    err = np.abs(fit.probs - truth)
    # max error sits on extreme covariate rows, so bound the mean tightly
    # and the max loosely
    assert err.mean() < 0.006
    assert err.max() < 0.1


def test_propensity_rows_sum_to_one():
    for regime in ("correct", "mainterms", "ml"):
        _, data = scenario_data(n=700, seed=10)
        spec = truth_propensity_spec() if regime == "correct" else None
        fit = fit_propensity(data, regime, truth_spec=spec)
        np.testing.assert_allclose(fit.probs.sum(axis=1), 1.0, atol=1e-10)
        assert fit.probs.min() > 0


def test_propensity_predict_matrix_matches_training_probs():
    _, data = scenario_data(n=500, seed=12)
    for regime in ("mainterms", "ml"):
        fit = fit_propensity(data, regime)
        np.testing.assert_allclose(fit.predict_matrix(data.X), fit.probs, atol=1e-12)


def test_ml_propensity_stepwise_is_parsimonious_under_weak_assignment():
    # weak treatment signals: BIC should keep the model small
    _, data = scenario_data("t-y-", n=1000, seed=13)
    fit = fit_propensity(data, "ml")
    assert "stepwise" in fit.description
    n_groups = int(fit.description.split("(")[1].split()[1])
    assert n_groups <= 4


def test_ml_propensity_deterministic():
    _, data = scenario_data(n=600, seed=14)
    f1 = fit_propensity(data, "ml")
    f2 = fit_propensity(data, "ml")
    np.testing.assert_array_equal(f1.probs, f2.probs)
    assert f1.description == f2.description
