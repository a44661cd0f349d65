import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gibbsbps.distributions import (
    exponential_from_uniform,
    make_rng,
    sample_exponential,
    sample_gamma,
    sample_inverse_gaussian,
    sample_open_uniform,
    sample_std_normal_vector,
    spawn_streams,
)
from gibbsbps.errors import ParameterDomainError

positive = st.floats(min_value=1e-3, max_value=1e3)


def test_same_seed_same_stream():
    assert np.array_equal(make_rng(42).random(5), make_rng(42).random(5))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_out_of_range(seed):
    with pytest.raises(ParameterDomainError):
        make_rng(seed)


def test_spawned_streams_are_distinct_and_reproducible():
    a = [g.random(3) for g in spawn_streams(7, 3)]
    b = [g.random(3) for g in spawn_streams(7, 3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.allclose(a[0], a[1])
    with pytest.raises(ParameterDomainError):
        spawn_streams(7, 0)


@pytest.mark.parametrize("shape,rate", [(0.3, 1.0), (1.0, 2.0), (5.5, 0.5), (513.0, 40.0)])
def test_gamma_matches_reference_law(shape, rate):
    draws = sample_gamma(shape, rate, make_rng(1), size=20000)
    assert stats.kstest(draws, stats.gamma(shape, scale=1 / rate).cdf).pvalue > 1e-3


@given(shape=positive, rate=positive)
@settings(max_examples=50, deadline=None)
def test_gamma_positive_finite(shape, rate):
    x = sample_gamma(shape, rate, make_rng(0), size=20)
    assert np.all(np.isfinite(x)) and np.all(x > 0)


@pytest.mark.parametrize("shape,rate", [(0, 1), (1, 0), (-1, 1), (math.inf, 1)])
def test_gamma_rejects_bad_parameters(shape, rate):
    with pytest.raises(ParameterDomainError):
        sample_gamma(shape, rate, make_rng(0))


def test_gamma_scalar_return_type():
    assert isinstance(sample_gamma(2.0, 1.0, make_rng(0)), float)


def test_exponential_hand_values():
    assert exponential_from_uniform(1.0, 3.0) == 0.0
    assert exponential_from_uniform(math.exp(-1.0), 2.0) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("u", [0.0, -0.1, 1.5])
def test_exponential_rejects_u_outside_unit_interval(u):
    with pytest.raises(ParameterDomainError):
        exponential_from_uniform(u)


def test_exponential_mean_and_ks():
    draws = sample_exponential(4.0, make_rng(3), size=50000)
    assert abs(draws.mean() - 0.25) < 3 * 0.25 / math.sqrt(draws.size)
    assert stats.kstest(draws, stats.expon(scale=0.25).cdf).pvalue > 1e-3


@pytest.mark.parametrize("mean,shape", [(1.0, 1.0), (0.2, 3.0), (5.0, 0.5), (1e3, 0.5)])
def test_inverse_gaussian_matches_reference_law(mean, shape):
    draws = sample_inverse_gaussian(mean, shape, make_rng(2), size=20000)
    ref = stats.invgauss(mean / shape, scale=shape)
    assert stats.kstest(draws, ref.cdf).pvalue > 1e-3


def test_inverse_gaussian_moments():
    mean, shape = 2.0, 3.0
    draws = sample_inverse_gaussian(mean, shape, make_rng(5), size=200000)
    var = mean**3 / shape
    assert abs(draws.mean() - mean) < 4 * math.sqrt(var / draws.size)
    assert draws.var() == pytest.approx(var, rel=0.05)


@given(log_mean=st.floats(-20, 30), log_shape=st.floats(-20, 20))
@settings(max_examples=200, deadline=None)
def test_inverse_gaussian_extreme_parameters_stay_positive(log_mean, log_shape):
    x = sample_inverse_gaussian(10.0**log_mean, 10.0**log_shape, make_rng(0), size=16)
    assert np.all(np.isfinite(x)) and np.all(x > 0)


def test_inverse_gaussian_broadcasts():
    x = sample_inverse_gaussian(np.array([1.0, 2.0, 3.0]), 1.0, make_rng(0))
    assert x.shape == (3,)


class _ZeroFirst:
    def __init__(self):
        self.calls = 0

    def random(self):
        self.calls += 1
        return 0.0 if self.calls == 1 else 0.25


def test_open_uniform_skips_zero():
    fake = _ZeroFirst()
    assert sample_open_uniform(fake) == 0.25
    assert fake.calls == 2


def test_std_normal_vector():
    assert sample_std_normal_vector(7, make_rng(0)).shape == (7,)
    with pytest.raises(ParameterDomainError):
        sample_std_normal_vector(0, make_rng(0))
