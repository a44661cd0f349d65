"""Random variate generation for the samplers.

All draws go through a :class:`numpy.random.Generator` (PCG64). Independent
sub-streams for parallel chains are derived with :class:`numpy.random.SeedSequence`
spawning, so a single 64-bit seed reproduces an entire experiment.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterDomainError

RngStream = np.random.Generator

_SEED_MAX = 2**64 - 1
_TINY = np.finfo(float).tiny


def make_rng(seed: int) -> RngStream:
    """Return a reproducible generator for an unsigned 64-bit ``seed``."""
    seed = int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise ParameterDomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_streams(seed: int, k: int) -> list[RngStream]:
    """Derive ``k`` statistically independent generators from one seed."""
    if k < 1:
        raise ParameterDomainError(f"need at least one stream, got {k}")
    seed = int(seed)
    if not 0 <= seed <= _SEED_MAX:
        raise ParameterDomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(k)]


def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise ParameterDomainError(f"{name} must be positive and finite, got {value!r}")
    return arr


def sample_gamma(shape, rate, rng: RngStream, size=None):
    """Gamma(shape, rate) draws; density proportional to t**(shape-1) exp(-rate t).

    numpy's ``standard_gamma`` is the Marsaglia-Tsang squeeze sampler (with the
    ``U**(1/shape)`` boost for shape < 1); we only rescale by the rate. For
    very small shapes the exact draw can underflow to 0, so results are
    floored at the smallest normal double to keep the support strictly positive.
    """
    shape = _check_positive("shape", shape)
    rate = _check_positive("rate", rate)
    out = np.maximum(rng.standard_gamma(shape, size=size) / rate, _TINY)
    return float(out) if np.ndim(out) == 0 else out


def exponential_from_uniform(u, rate=1.0):
    """Inverse-CDF transform of uniform ``u`` in (0, 1] to Exp(rate)."""
    rate = _check_positive("rate", rate)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u > 1):
        raise ParameterDomainError("uniform input must lie in (0, 1]")
    out = -np.log(u) / rate
    return float(out) if out.ndim == 0 else out


def sample_exponential(rate, rng: RngStream, size=None):
    """Exp(rate) draws by inversion. Mean is ``1/rate``."""
    # 1 - U lies in (0, 1], so the log is always finite.
    u = 1.0 - rng.random(size)
    return exponential_from_uniform(u, rate)


def sample_inverse_gaussian(mean, shape, rng: RngStream, size=None):
    """Inverse-Gaussian IG(mean, shape) draws via Michael-Schucany-Haas.

    The smaller root of the quadratic is written as ``mean / (1 + r/2 + sqrt(r + r^2/4))``
    with ``r = mean * chi2 / shape``, which avoids the cancellation of the textbook
    form when ``mean / shape`` is huge (near-zero data sites).

    Parameters
    ----------
    mean, shape : float or ndarray
        Positive parameters; broadcast against each other.
    rng : numpy.random.Generator
    size : int or tuple, optional
        Output shape. Defaults to the broadcast shape of the parameters.

    Returns
    -------
    float or ndarray
        Strictly positive draws with ``E = mean`` and ``Var = mean**3 / shape``.
    """
    mu = _check_positive("mean", mean)
    lam = _check_positive("shape", shape)
    if size is None:
        size = np.broadcast(mu, lam).shape
    nu = rng.standard_normal(size)
    r = mu * (nu * nu) / lam
    root = mu / (1.0 + 0.5 * r + np.sqrt(r + 0.25 * r * r))
    u = rng.random(size)
    out = np.where(u * (mu + root) <= mu, root, mu * mu / root)
    return float(out) if np.ndim(out) == 0 else out


def sample_open_uniform(rng: RngStream) -> float:
    """A single Uniform(0, 1) draw that is never exactly 0."""
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def sample_std_normal_vector(n: int, rng: RngStream) -> np.ndarray:
    """``n`` independent standard normal draws."""
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n}")
    return rng.standard_normal(int(n))
