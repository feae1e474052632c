import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stosym.errors import UsageError
from stosym.stats_verify import ks_critical, ks_one_sample, ks_statistic, ks_two_sample, mc_mean_ci, moment_compare

samples = arrays(float, st.integers(50, 120), elements=st.floats(-100, 100, allow_nan=False))
# integer-valued draws keep a strictly increasing float map injective after rounding
integer_samples = arrays(float, st.integers(50, 120), elements=st.integers(-1000, 1000).map(float))


def test_ks_critical_value():
    assert ks_critical(0.05) == pytest.approx(1.3581, abs=1e-4)
    with pytest.raises(UsageError):
        ks_critical(0.0)


def test_ks_statistic_against_scipy():
    from scipy.stats import ks_2samp

    rng = np.random.default_rng(0)
    a, b = rng.normal(size=300), rng.normal(0.2, 1, size=200)
    assert ks_statistic(a, b) == pytest.approx(ks_2samp(a, b).statistic, abs=1e-12)


def test_ks_detects_shift_and_accepts_same_law():
    rng = np.random.default_rng(1)
    assert ks_two_sample(rng.normal(size=2000), rng.normal(size=2000)).passed
    assert not ks_two_sample(rng.normal(size=2000), rng.normal(0.5, size=2000)).passed
    with pytest.raises(UsageError):
        ks_two_sample(np.zeros(10), np.zeros(100))


def test_one_sample_ks():
    from scipy.special import ndtr

    rng = np.random.default_rng(2)
    assert ks_one_sample(rng.normal(size=1000), ndtr).passed
    assert not ks_one_sample(rng.normal(1.0, size=1000), ndtr).passed


@given(integer_samples, integer_samples)
def test_ks_invariant_under_monotone_map(a, b):
    f = lambda x: np.arctan(x / 7.0) * 3.0 + 1.0  # noqa: E731
    assert ks_statistic(a, b) == pytest.approx(ks_statistic(f(a), f(b)), abs=1e-12)


@given(samples, samples)
def test_moment_compare_symmetric(a, b):
    assert moment_compare(a, b, (1, 2)).statistic == moment_compare(b, a, (1, 2)).statistic
    assert ks_statistic(a, b) == ks_statistic(b, a)


def test_moment_compare_bad_order():
    with pytest.raises(UsageError):
        moment_compare(np.zeros(5), np.ones(5), (5,))


def test_mc_mean_ci():
    mean, se = mc_mean_ci(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert not math.isnan(se)
