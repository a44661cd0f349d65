"""Exact draws from the conditional Gaussian ``N(P^{-1} b, P^{-1})`` by Cholesky."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, lapack, solve_triangular

from .distributions import RngStream
from .errors import CapacityError, SPDError
from .operators import PrecisionContext

MAX_DENSE_N = 16384


def cholesky_lower(P: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises :class:`SPDError` naming the failing pivot."""
    L, info = lapack.dpotrf(P, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise SPDError(int(info))
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return L


def sample_gaussian_precision(P: np.ndarray, rhs: np.ndarray, rng: RngStream, size=None):
    """Draw from ``N(mu, P^{-1})`` where ``P mu = rhs``.

    With ``P = L L^T`` a draw is ``mu + L^{-T} z``. ``size`` adds leading
    sample dimensions (handy for moment tests); the factor is computed once.
    """
    L = cholesky_lower(P)
    mu = cho_solve((L, True), rhs)
    n = P.shape[0]
    if size is None:
        z = rng.standard_normal(n)
        return mu + solve_triangular(L, z, lower=True, trans="T")
    z = rng.standard_normal((n, int(np.prod(size))))
    draws = mu[:, None] + solve_triangular(L, z, lower=True, trans="T")
    return draws.T.reshape(tuple(np.atleast_1d(size)) + (n,))


def conditional_mean(ctx: PrecisionContext) -> np.ndarray:
    """Solve ``P mu = A^T y / sigma^2`` with a dense factorization."""
    _check_capacity(ctx.n)
    L = cholesky_lower(ctx.dense())
    return cho_solve((L, True), ctx.rhs)


def _check_capacity(n):
    if n > MAX_DENSE_N:
        raise CapacityError(
            f"dense Gaussian sampling limited to n <= {MAX_DENSE_N} (got n={n}); use the gibbs-bps sampler"
        )


def sample_conditional_gaussian(ctx: PrecisionContext, rng: RngStream) -> np.ndarray:
    """One exact draw of the image given the current shrinkage parameters."""
    _check_capacity(ctx.n)
    return sample_gaussian_precision(ctx.dense(), ctx.rhs, rng)
