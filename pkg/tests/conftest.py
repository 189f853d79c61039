"""Shared replication fixtures for the acceptance tests.

Each fixture runs one full replication study once per session; the
acceptance tests read several gated quantities from the same report.
Everything is deterministic given the pinned seeds, so the asserted
numbers are stable run to run.
"""

import pytest

from mlte.simengine import ScenarioConfig, run_scenario


def scenario_report(scenario, seed, regime, methods=None, n=1000, reps=500, bootstrap_reps=0):
    cfg = ScenarioConfig.named(
        scenario, n=n, reps=reps, seed=seed, regime=regime, bootstrap_reps=bootstrap_reps
    )
    return run_scenario(cfg, methods=methods)


@pytest.fixture(scope="session")
def weak_confounding_correct_report():
    """All estimators with correct working models under weak confounding,
    bootstrap inference enabled for the standardization rows."""
    return scenario_report("t-y-", seed=101, regime="correct", bootstrap_reps=200)


@pytest.fixture(scope="session")
def strong_confounding_correct_report():
    return scenario_report("t+y+", seed=102, regime="correct")


@pytest.fixture(scope="session")
def strong_confounding_mainterms_report():
    """Deliberately misspecified parametric working models under strong
    confounding: main-terms designs omit the interaction and square terms."""
    return scenario_report("t+y+", seed=103, regime="mainterms")


@pytest.fixture(scope="session")
def weak_outcome_mainterms_stan_report():
    return scenario_report("t+y-", seed=104, regime="mainterms", methods=["stan"])


@pytest.fixture(scope="session")
def weak_confounding_ml_report():
    return scenario_report(
        "t-y-",
        seed=105,
        regime="ml",
        methods=["stan", "ipw", "bcm", "tmle", "ow", "aow"],
    )


@pytest.fixture(scope="session")
def small_n_correct_ow_report():
    return scenario_report(
        "t-y-", seed=106, regime="correct", n=500, methods=["ow", "aow"]
    )
