"""Accumulators, Monte Carlo reports, and normality checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.errors import ParameterRangeError
from slitflow.stats import (
    McReport,
    RunningStats,
    drift_test,
    ks_normality,
    spawn_seeds,
)


def test_running_stats_matches_numpy():
    rng = np.random.default_rng(0)
    xs = rng.standard_normal(1000)
    acc = RunningStats()
    acc.add_batch(xs[:300])
    acc.add_batch(xs[300:])
    assert acc.n == 1000
    assert acc.mean == pytest.approx(float(np.mean(xs)), abs=1e-12)
    assert acc.variance == pytest.approx(float(np.var(xs, ddof=1)), rel=1e-12)


def test_running_stats_merge_is_order_insensitive_up_to_roundoff():
    rng = np.random.default_rng(1)
    xs = rng.standard_normal(400)
    a = RunningStats()
    a.add_batch(xs)
    b1, b2 = RunningStats(), RunningStats()
    b1.add_batch(xs[:100])
    b2.add_batch(xs[100:])
    b1.merge(b2)
    assert b1.n == a.n
    assert b1.mean == pytest.approx(a.mean, abs=1e-12)
    assert b1.variance == pytest.approx(a.variance, rel=1e-10)


def test_running_stats_empty_and_single():
    acc = RunningStats()
    acc.add_batch([])
    assert acc.n == 0 and acc.se == math.inf
    acc.add_batch([2.0])
    assert acc.mean == 2.0 and acc.variance == 0.0


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
@settings(max_examples=100, deadline=None)
def test_running_stats_variance_nonnegative(xs):
    acc = RunningStats()
    acc.add_batch(xs)
    assert acc.variance >= -1e-9 * max(1.0, max(abs(x) for x in xs)) ** 2


def test_mc_report_zscore_and_pass():
    rep = McReport("obs", 400, 1.05, 1.0, 1.0)
    assert rep.se == pytest.approx(0.05)
    assert rep.zscore == pytest.approx(1.0)
    assert rep.passed
    rep2 = McReport("obs", 400, 1.30, 1.0, 1.0)
    assert not rep2.passed
    row = rep.csv_row()
    assert row["pass"] is True and row["name"] == "obs"


def test_mc_report_degenerate_se():
    rep = McReport("const", 10, 3.0, 0.0, 3.0)
    assert rep.passed and rep.zscore == 0.0
    rep_bad = McReport("const", 10, 3.0, 0.0, 2.0)
    assert not rep_bad.passed


def test_drift_test_zero_mean_passes():
    rng = np.random.default_rng(2)
    rep = drift_test(rng.standard_normal(10_000), name="noise", seed=2)
    assert rep.passed and abs(rep.zscore) < 3


def test_drift_test_detects_bias():
    rng = np.random.default_rng(3)
    rep = drift_test(rng.standard_normal(10_000) + 0.1)
    assert not rep.passed


def test_drift_test_requires_enough_paths():
    with pytest.raises(ParameterRangeError):
        drift_test(np.zeros(50))


def test_drift_test_flags_degenerate_variance():
    rep = drift_test(np.zeros(200))
    assert "degenerate variance" in rep.name
    assert rep.passed


def test_ks_normality_accepts_gaussian_rejects_uniform():
    rng = np.random.default_rng(4)
    gs = 2.0 + 0.5 * rng.standard_normal(5000)
    stat, crit = ks_normality(gs, 2.0, 0.5)
    assert stat < crit
    us = rng.uniform(-1, 1, 5000)
    stat_u, crit_u = ks_normality(us, 0.0, math.sqrt(1.0 / 3.0))
    assert stat_u > crit_u


def test_spawn_seeds_deterministic_and_independent():
    a = [g.standard_normal(4) for g in spawn_seeds(7, 3)]
    b = [g.standard_normal(4) for g in spawn_seeds(7, 3)]
    for xa, xb in zip(a, b):
        assert np.array_equal(xa, xb)
    assert not np.array_equal(a[0], a[1])
