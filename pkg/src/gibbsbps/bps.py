"""Bouncy particle sampler for Gaussian potentials.

For ``U(x) = 0.5 x^T P x - b^T x`` the bounce rate along ``x + t v`` is
``(c1 + c2 t)_+`` with ``c1 = <v, grad U(x)>`` and ``c2 = v^T P v``, so the
first arrival time has a closed-form inverse CDF.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .distributions import RngStream, sample_exponential, sample_open_uniform
from .errors import DegenerateGradientError, ParameterDomainError, StateError
from .operators import PrecisionContext, apply_precision, grad_potential


class EventKind(enum.Enum):
    BOUNCE = "bounce"
    REFRESH = "refresh"
    GIBBS = "gibbs"


@dataclass
class ParticleState:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class TrajectorySegment:
    """Straight piece ``x_start + t v`` for ``t`` in ``[0, s]``."""

    x_start: np.ndarray
    v: np.ndarray
    s: float


def arrival_time(c1: float, c2: float, u: float) -> float:
    """Invert ``int_0^s (c1 + c2 t)_+ dt = -log u`` for ``s``."""
    if not 0.0 < u < 1.0:
        raise ParameterDomainError(f"u must lie in (0, 1), got {u}")
    if not (math.isfinite(c1) and math.isfinite(c2)) or c2 <= 0.0:
        raise StateError(f"invalid rate coefficients c1={c1}, c2={c2}")
    cp = c1 if c1 > 0.0 else 0.0
    disc = cp * cp - 2.0 * c2 * math.log(u)
    # rounding can push a zero discriminant slightly negative
    return (-c1 + math.sqrt(max(disc, 0.0))) / c2


def bounce_time_gaussian(x, v, ctx: PrecisionContext, u: float) -> float:
    """First bounce time from ``(x, v)`` under the conditional Gaussian in ``ctx``."""
    c1 = float(v @ grad_potential(x, ctx))
    c2 = float(v @ apply_precision(v, ctx))
    return arrival_time(c1, c2, u)


def reflect(v, grad) -> np.ndarray:
    """Reflect ``v`` in the hyperplane orthogonal to ``grad``."""
    v = np.asarray(v, dtype=float)
    grad = np.asarray(grad, dtype=float)
    g2 = float(grad @ grad)
    if not g2 > 1e-60:
        raise DegenerateGradientError("cannot reflect against a zero gradient")
    return v - (2.0 * float(v @ grad) / g2) * grad


def bps_gaussian_run(ctx: PrecisionContext, T: float, lambda_ref: float, rng: RngStream,
                     x0=None, v0=None) -> list[TrajectorySegment]:
    """Standalone BPS against the fixed Gaussian of ``ctx`` up to time ``T``.

    Starts at ``x0`` (default 0) with ``v0`` (default standard normal). The
    last segment is truncated so the durations sum to exactly ``T``.
    """
    if not T > 0 or not lambda_ref > 0:
        raise ParameterDomainError("T and lambda_ref must be positive")
    x = np.zeros(ctx.n) if x0 is None else np.array(x0, dtype=float)
    v = rng.standard_normal(ctx.n) if v0 is None else np.array(v0, dtype=float)
    g = grad_potential(x, ctx)
    w = apply_precision(v, ctx)
    segments = []
    t = 0.0
    while t < T:
        s_bounce = arrival_time(float(v @ g), float(v @ w), sample_open_uniform(rng))
        s_ref = sample_exponential(lambda_ref, rng)
        s = min(s_bounce, s_ref)
        if t + s >= T:
            segments.append(TrajectorySegment(x.copy(), v.copy(), T - t))
            break
        segments.append(TrajectorySegment(x.copy(), v.copy(), s))
        t += s
        x = x + s * v
        g = grad_potential(x, ctx)
        if s_ref < s_bounce:
            v = rng.standard_normal(ctx.n)
        else:
            v = reflect(v, g)
        w = apply_precision(v, ctx)
    return segments
