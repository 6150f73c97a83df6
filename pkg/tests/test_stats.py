import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from contactscale.errors import InsufficientDataError, UsageError
from contactscale.stats import (adjacent_pairs, dispersion_test, jackknife, ks_test,
                                poisson_suite, ratio_se, tv_distance, void_test, wilson_interval,
                                z_agree)


def test_tv_examples():
    p = {"a": 0.5, "b": 0.5}
    assert tv_distance(p, p) == 0.0
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == 1.0
    assert tv_distance(p, {"a": 0.75, "b": 0.25}) == pytest.approx(0.25)


def test_tv_rejects_mismatched_truncation():
    class Law:
        def __init__(self, cap):
            self.freqs, self.overflow, self.width_cap = {"a": 1.0}, 0.0, cap
    with pytest.raises(UsageError):
        tv_distance(Law(5), Law(6))
    assert tv_distance(Law(5), Law(5)) == 0.0


laws = st.dictionaries(st.integers(0, 6), st.floats(0.01, 1.0), min_size=1).map(
    lambda d: {k: v / sum(d.values()) for k, v in d.items()})


@settings(max_examples=300)
@given(laws, laws, laws)
def test_tv_metric_axioms(p, q, r):
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p))
    assert 0 <= tv_distance(p, q) <= 1 + 1e-12
    assert tv_distance(p, p) == 0
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


def test_ks_self_sampling_is_uniform():
    rng = np.random.default_rng(1)
    cdf = scipy.stats.expon(scale=2.0).cdf
    ps = [ks_test(rng.exponential(2.0, 400), cdf).p_value for _ in range(200)]
    assert abs(np.mean(ps) - 0.5) < 0.05


def test_ks_constant_and_grid_samples():
    cdf = scipy.stats.norm.cdf
    rep = ks_test(np.zeros(200), cdf)
    assert rep.p_value < 1e-10 and not rep.passed
    n = 100
    grid = scipy.stats.norm.ppf((np.arange(n) + 0.5) / n)
    assert ks_test(grid, cdf).statistic == pytest.approx(1 / (2 * n))
    with pytest.raises(InsufficientDataError):
        ks_test(np.zeros(49), cdf)


def test_poisson_suite_on_poisson_data():
    rng = np.random.default_rng(2)
    trials = 200
    rejected = 0
    all_pass = 0
    for _ in range(trials):
        counts = rng.poisson(0.7, size=(600, 5, 5))
        reps = poisson_suite(counts, 0.7)
        rejected += not all(r.passed for r in reps)
        all_pass += all(r.passed for r in reps)
    assert all_pass / trials >= 0.98
    assert rejected / trials <= 2 * 0.01


def test_doubled_points_are_overdispersed():
    rng = np.random.default_rng(3)
    counts = 2 * rng.poisson(0.35, size=(600, 25))
    rep = dispersion_test(counts)
    assert not rep.passed
    assert rep.params["variance_to_mean"] == pytest.approx(2.0, rel=0.1)


def test_zero_intensity_is_vacuous():
    counts = np.zeros((600, 9), dtype=int)
    reps = poisson_suite(counts, 0.0)
    assert all(r.passed for r in reps)
    assert "zero intensity" in reps[0].note


def test_poisson_suite_needs_replicas():
    with pytest.raises(InsufficientDataError):
        poisson_suite(np.zeros((10, 3)), 1.0)


def test_void_test_detects_wrong_intensity():
    rng = np.random.default_rng(4)
    counts = rng.poisson(1.0, size=(2000, 9))
    assert void_test(counts, 1.0).passed
    assert not void_test(counts, 1.3).passed


def test_adjacent_pairs():
    assert adjacent_pairs((3,)) == [(0, 1), (1, 2)]
    assert len(adjacent_pairs((3, 3))) == 12


def test_interval_helpers():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    assert ratio_se(2.0, 0.0, 4.0, 0.0) == 0.0
    assert ratio_se(2.0, 0.2, 4.0, 0.0) == pytest.approx(0.05)
    assert z_agree(1.0, 0.3, 1.0, 0.4) == (0.0, True)
    z, ok = z_agree(2.0, 0.3, 0.0, 0.4)
    assert z == pytest.approx(4.0) and not ok


def test_jackknife_of_a_mean():
    rng = np.random.default_rng(5)
    x = rng.normal(size=2000)
    est, se = jackknife(lambda m: x[m].mean(), 20, len(x))
    assert est == pytest.approx(x.mean())
    assert se == pytest.approx(x.std(ddof=1) / math.sqrt(len(x)), rel=0.4)
