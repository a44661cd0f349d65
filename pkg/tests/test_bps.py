import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from gibbsbps.bps import (
    EventKind,
    TrajectorySegment,
    arrival_time,
    bounce_time_gaussian,
    bps_gaussian_run,
    reflect,
)
from gibbsbps.distributions import make_rng
from gibbsbps.errors import DegenerateGradientError, ParameterDomainError, StateError
from gibbsbps.operators import DensePrecision, grad_potential, potential
from gibbsbps.samplers import MomentAccumulator, accumulate_segment, finalize_moments, segment_batch_moments

STD_NORMAL = DensePrecision(np.eye(1))


@pytest.mark.parametrize(
    "x,u,expected",
    [
        (0.0, math.exp(-0.5), 1.0),
        (2.0, math.exp(-2.0), 2.0 * math.sqrt(2.0) - 2.0),
        (-2.0, math.exp(-0.5), 3.0),
    ],
)
def test_bounce_time_hand_values(x, u, expected):
    s = bounce_time_gaussian(np.array([x]), np.array([1.0]), STD_NORMAL, u)
    assert s == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 2.0])
def test_arrival_time_rejects_u(u):
    with pytest.raises(ParameterDomainError):
        arrival_time(1.0, 1.0, u)


@pytest.mark.parametrize("c1,c2", [(math.nan, 1.0), (1.0, 0.0), (1.0, -1.0), (math.inf, 1.0)])
def test_arrival_time_rejects_bad_coefficients(c1, c2):
    with pytest.raises(StateError):
        arrival_time(c1, c2, 0.5)


def _random_instance(rng):
    n = int(rng.integers(1, 6))
    B = rng.standard_normal((n, n))
    P = B @ B.T + 0.1 * np.eye(n)
    ctx = DensePrecision(P, rng.standard_normal(n))
    return ctx, rng.standard_normal(n), rng.standard_normal(n), float(rng.uniform(1e-6, 1 - 1e-6))


def test_arrival_time_matches_quadrature():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        ctx, x, v, u = _random_instance(rng)
        s = bounce_time_gaussian(x, v, ctx, u)
        rate = lambda t: max(0.0, float(v @ grad_potential(x + t * v, ctx)))
        c1 = float(v @ grad_potential(x, ctx))
        c2 = float(v @ ctx.apply(v))
        kink = max(0.0, -c1 / c2)
        pts = [kink] if 0 < kink < s else None
        integral = quad(rate, 0.0, s, points=pts, epsabs=0, epsrel=1e-12, limit=200)[0]
        worst = max(worst, abs(integral + math.log(u)) / -math.log(u))
    assert worst < 1e-8


def test_potential_increase_beyond_minimum_equals_minus_log_u():
    rng = np.random.default_rng(3)
    for _ in range(50):
        ctx, x, v, u = _random_instance(rng)
        s = bounce_time_gaussian(x, v, ctx, u)
        c1 = float(v @ grad_potential(x, ctx))
        s_star = max(0.0, -c1 / float(v @ ctx.apply(v)))
        gain = potential(x + s * v, ctx) - potential(x + s_star * v, ctx)
        assert gain == pytest.approx(-math.log(u), rel=1e-7, abs=1e-9)
        assert s >= s_star


def test_reflect_hand_values():
    np.testing.assert_allclose(reflect([1.0, 0.0], [1.0, 1.0]), [0.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(reflect([1.0, -1.0], [1.0, 1.0]), [1.0, -1.0])
    np.testing.assert_allclose(reflect([2.0, 2.0], [1.0, 1.0]), [-2.0, -2.0])


vectors = st.integers(1, 8).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n)] * 2)
)


@given(vectors)
@settings(max_examples=200, deadline=None)
def test_reflection_algebra(pair):
    v, g = (np.array(p) for p in pair)
    if g @ g <= 1e-20:
        return
    r = reflect(v, g)
    scale = max(1.0, np.linalg.norm(v))
    assert np.linalg.norm(reflect(r, g) - v) <= 1e-12 * scale * 10
    assert abs(np.linalg.norm(r) - np.linalg.norm(v)) <= 1e-12 * scale * 10
    assert abs(r @ g + v @ g) <= 1e-12 * scale * np.linalg.norm(g) * 10


def test_reflect_degenerate_gradient():
    with pytest.raises(DegenerateGradientError):
        reflect([1.0, 2.0], [0.0, 1e-31])


def test_run_truncates_at_T():
    segs = bps_gaussian_run(STD_NORMAL, 1e-9, 1.0, make_rng(0), x0=[0.0], v0=[1.0])
    assert len(segs) == 1 and segs[0].s == 1e-9
    segs = bps_gaussian_run(STD_NORMAL, 50.0, 1.0, make_rng(1))
    assert math.fsum(s.s for s in segs) == pytest.approx(50.0, rel=1e-12)


def test_run_validates():
    with pytest.raises(ParameterDomainError):
        bps_gaussian_run(STD_NORMAL, 0.0, 1.0, make_rng(0))
    with pytest.raises(ParameterDomainError):
        bps_gaussian_run(STD_NORMAL, 1.0, 0.0, make_rng(0))


def _moments(segs, n):
    acc = MomentAccumulator.zeros(n)
    for seg in segs:
        accumulate_segment(acc, seg.x_start, seg.v, seg.s)
    return finalize_moments(acc)


def test_standard_normal_symmetry():
    segs = bps_gaussian_run(STD_NORMAL, 1e4, 10.0, make_rng(5))
    pos = sum(
        max(0.0, min(seg.s, -seg.x_start[0] / seg.v[0] if seg.v[0] < 0 else seg.s)) if seg.x_start[0] > 0
        else max(0.0, seg.s - (-seg.x_start[0] / seg.v[0])) if seg.v[0] > 0 else 0.0
        for seg in segs
    )
    assert pos / 1e4 == pytest.approx(0.5, abs=0.03)


def test_gaussian_mean_within_batch_standard_errors():
    mu = np.array([1.0, -1.0])
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    ctx = DensePrecision.from_moments(mu, cov)
    segs = bps_gaussian_run(ctx, 5000.0, 10.0, make_rng(7))
    means, seconds = segment_batch_moments(segs, 25)
    se = means.std(0, ddof=1) / math.sqrt(25)
    assert np.all(np.abs(means.mean(0) - mu) < 3.5 * se)
    se2 = seconds.std(0, ddof=1) / math.sqrt(25)
    assert np.all(np.abs(seconds.mean(0) - (np.diag(cov) + mu**2)) < 3.5 * se2)


def test_event_kind_values():
    assert {k.value for k in EventKind} == {"bounce", "refresh", "gibbs"}
    seg = TrajectorySegment(np.zeros(2), np.ones(2), 0.5)
    assert seg.s == 0.5
