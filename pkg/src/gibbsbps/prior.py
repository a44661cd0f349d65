"""Fused L_{1/2}-type prior: global rates and local scales.

The prior on a block of values ``t`` (pixels or increments) is
``exp(-lam * sum |t|^alpha)`` with ``alpha = 2**-gamma``. Conditionally on the
local scales it is Gaussian with precision ``lam**(2/alpha) / tau2`` per site;
the scales carry a latent Gamma ladder ``v^gamma -> ... -> v^1 -> tau2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import RngStream, sample_gamma, sample_inverse_gaussian
from .errors import ParameterDomainError, ShapeError
from .operators import apply_diff_h, apply_diff_v

ABS_FLOOR = 1e-12
TAU2_MIN, TAU2_MAX = 1e-16, 1e16


@dataclass(frozen=True)
class HyperParams:
    """Prior exponents and Gamma(shape, rate) hyperpriors on the three rates."""

    gamma1: int = 1
    gamma2: int = 1
    a1: float = 1.0
    b1: float = 1.0
    a2: float = 1.0
    b2: float = 1.0
    a3: float = 1.0
    b3: float = 1.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2"):
            g = getattr(self, name)
            if int(g) != g or g < 0:
                raise ParameterDomainError(f"{name} must be a non-negative integer, got {g}")
        for name in ("a1", "b1", "a2", "b2", "a3", "b3"):
            if not getattr(self, name) > 0:
                raise ParameterDomainError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def alpha1(self) -> float:
        return 2.0 ** -self.gamma1

    @property
    def alpha2(self) -> float:
        return 2.0 ** -self.gamma2


@dataclass
class ShrinkageState:
    """Global rates and local squared scales for pixels and both increment fields."""

    lambda1: float
    lambda2: float
    lambda3: float
    tau2: np.ndarray
    tau2_h: np.ndarray
    tau2_v: np.ndarray

    @classmethod
    def initial(cls, d: int) -> "ShrinkageState":
        """All rates 1 and all scales 1."""
        ne = d * (d - 1)
        return cls(1.0, 1.0, 1.0, np.ones(d * d), np.ones(ne), np.ones(ne))

    def precision_diagonals(self, hyper: HyperParams):
        """Per-site precisions ``lam**(2/alpha) / tau2`` for the three blocks."""
        p1 = self.lambda1 ** (2.0 / hyper.alpha1)
        p2 = self.lambda2 ** (2.0 / hyper.alpha2)
        p3 = self.lambda3 ** (2.0 / hyper.alpha2)
        return p1 / self.tau2, p2 / self.tau2_h, p3 / self.tau2_v


def _check_gamma(gamma):
    if int(gamma) != gamma or gamma < 0:
        raise ParameterDomainError(f"gamma must be a non-negative integer, got {gamma}")
    return int(gamma)


def sample_global_lambda(values, gamma: int, a: float, b: float, rng: RngStream) -> float:
    """Draw the rate from ``Gamma(2^gamma * len + a, sum |t|^(2^-gamma) + b)``."""
    gamma = _check_gamma(gamma)
    values = np.asarray(values, dtype=float)
    shape = 2.0**gamma * values.size + a
    rate = float(np.sum(np.abs(values) ** (2.0**-gamma))) + b
    return sample_gamma(shape, rate, rng)


def sample_local_tau_block(values, lam: float, gamma: int, rng: RngStream) -> np.ndarray:
    """Draw ``tau2`` per site from its conditional given the site value and rate.

    Runs the inverse-Gaussian ladder top-down: ``1/v^gamma``, then
    ``1/v^l`` for ``l = gamma-1, ..., 1``, then ``1/tau2``. Site values are
    floored at ``1e-12`` in absolute value and the result is clipped to
    ``[1e-16, 1e16]``.
    """
    gamma = _check_gamma(gamma)
    if not lam > 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}")
    a = np.maximum(np.abs(np.asarray(values, dtype=float)), ABS_FLOOR)
    if gamma == 0:
        w = sample_inverse_gaussian(1.0 / (lam * a), 1.0, rng, size=a.shape)
    else:
        w = sample_inverse_gaussian(1.0 / (2.0 * lam * a ** (2.0**-gamma)), 0.5, rng, size=a.shape)
        v = 1.0 / w
        for level in range(gamma - 1, 0, -1):
            # the rate enters through (lam^(2^gamma) |t|)^(2^-level)
            scale = lam ** (2.0 ** (gamma - level)) * a ** (2.0**-level)
            w = sample_inverse_gaussian(1.0 / (2.0 * v * scale), 0.5 / v**2, rng, size=a.shape)
            v = 1.0 / w
        w = sample_inverse_gaussian(1.0 / (lam ** (2.0**gamma) * v * a), 1.0 / v**2, rng, size=a.shape)
    return np.clip(1.0 / w, TAU2_MIN, TAU2_MAX)


def sample_prior_tau2(size, gamma: int, rng: RngStream) -> np.ndarray:
    """Forward draws of ``tau2`` from the latent Gamma ladder (no data)."""
    gamma = _check_gamma(gamma)
    if gamma == 0:
        return rng.exponential(2.0, size)
    v = rng.standard_gamma((2.0**gamma + 1) / 2.0, size) * 4.0
    for level in range(gamma - 1, 0, -1):
        v = rng.standard_gamma((2.0**level + 1) / 2.0, size) * (4.0 * v**2)
    return rng.exponential(2.0 * v**2)


def sample_prior_values(size, lam: float, gamma: int, rng: RngStream) -> np.ndarray:
    """Forward draws from ``exp(-lam |t|^(2^-gamma))`` through the Gaussian mixture."""
    tau2 = sample_prior_tau2(size, gamma, rng)
    prec = lam ** (2.0 ** (gamma + 1))
    return rng.standard_normal(np.shape(tau2)) * np.sqrt(tau2 / prec)


def update_shrinkage(x, state: ShrinkageState, hyper: HyperParams, rng: RngStream,
                     d: int | None = None) -> ShrinkageState:
    """Exact draw of all shrinkage parameters given the image ``x``.

    The three blocks (pixels, horizontal increments, vertical increments) are
    conditionally independent; each draws its rate first, then its local scales.
    """
    x = np.asarray(x, dtype=float)
    dh = apply_diff_h(x, d)
    dv = apply_diff_v(x, d)
    if state.tau2.shape != x.shape or state.tau2_h.shape != dh.shape or state.tau2_v.shape != dv.shape:
        raise ShapeError("shrinkage state does not match image size")
    lam1 = sample_global_lambda(x, hyper.gamma1, hyper.a1, hyper.b1, rng)
    tau2 = sample_local_tau_block(x, lam1, hyper.gamma1, rng)
    lam2 = sample_global_lambda(dh, hyper.gamma2, hyper.a2, hyper.b2, rng)
    tau2_h = sample_local_tau_block(dh, lam2, hyper.gamma2, rng)
    lam3 = sample_global_lambda(dv, hyper.gamma2, hyper.a3, hyper.b3, rng)
    tau2_v = sample_local_tau_block(dv, lam3, hyper.gamma2, rng)
    return ShrinkageState(lam1, lam2, lam3, tau2, tau2_h, tau2_v)
