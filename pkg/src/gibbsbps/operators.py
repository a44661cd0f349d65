"""Structured image-domain operators and the conditional Gaussian precision.

Images are stored flat in row-major order: pixel ``(i, j)`` of a ``d x d``
image sits at index ``i*d + j``. Horizontal increments ``x[i, j] - x[i, j-1]``
form a ``d x (d-1)`` array, vertical increments ``x[i, j] - x[i-1, j]`` a
``(d-1) x d`` array; both are flattened row-major. Only interior increments are
used (no boundary rows).

All ``apply_*`` functions accept a vector of length ``d*d`` or a stack of such
vectors as columns of an ``(d*d, k)`` array.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .errors import ParameterDomainError, ShapeError, StateError

# dense A^T A is only cached when cheaper than two sparse products and fits comfortably
DENSE_ATA_MAX_N = 4096


def side_length(n: int) -> int:
    d = math.isqrt(n)
    if d * d != n:
        raise ShapeError(f"vector of length {n} is not a square image")
    return d


def _as_image(x, d=None):
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if d is None:
        d = side_length(n)
    elif n != d * d:
        raise ShapeError(f"expected length {d * d}, got {n}")
    return x.reshape((d, d) + x.shape[1:]), d


def build_difference_matrix(d: int) -> sp.csr_matrix:
    """Sparse ``(d-1) x d`` first-difference matrix with rows ``[.., -1, 1, ..]``."""
    if d < 2:
        raise ParameterDomainError(f"difference matrix needs d >= 2, got {d}")
    return sp.diags([-np.ones(d - 1), np.ones(d - 1)], [0, 1], shape=(d - 1, d), format="csr")


def kron_diff_h(d: int) -> sp.csr_matrix:
    """Explicit horizontal-increment matrix for row-major storage (``I_d kron D``)."""
    return sp.kron(sp.identity(d), build_difference_matrix(d), format="csr")


def kron_diff_v(d: int) -> sp.csr_matrix:
    """Explicit vertical-increment matrix for row-major storage (``D kron I_d``)."""
    return sp.kron(build_difference_matrix(d), sp.identity(d), format="csr")


def apply_diff_h(x, d: int | None = None) -> np.ndarray:
    """Horizontal increments ``x[i, j] - x[i, j-1]``, length ``d*(d-1)``."""
    X, d = _as_image(x, d)
    out = X[:, 1:] - X[:, :-1]
    return out.reshape((d * (d - 1),) + X.shape[2:])


def apply_diff_v(x, d: int | None = None) -> np.ndarray:
    """Vertical increments ``x[i, j] - x[i-1, j]``, length ``d*(d-1)``."""
    X, d = _as_image(x, d)
    out = X[1:, :] - X[:-1, :]
    return out.reshape((d * (d - 1),) + X.shape[2:])


def apply_diff_h_t(w, d: int) -> np.ndarray:
    """Adjoint of :func:`apply_diff_h`."""
    w = np.asarray(w, dtype=float)
    W = w.reshape((d, d - 1) + w.shape[1:])
    out = np.zeros((d, d) + w.shape[1:])
    out[:, 1:] += W
    out[:, :-1] -= W
    return out.reshape((d * d,) + w.shape[1:])


def apply_diff_v_t(w, d: int) -> np.ndarray:
    """Adjoint of :func:`apply_diff_v`."""
    w = np.asarray(w, dtype=float)
    W = w.reshape((d - 1, d) + w.shape[1:])
    out = np.zeros((d, d) + w.shape[1:])
    out[1:, :] += W
    out[:-1, :] -= W
    return out.reshape((d * d,) + w.shape[1:])


class NormalOperator:
    """Applies ``A^T A`` either through a cached dense product or two sparse products."""

    def __init__(self, A, AtA=None, policy: str = "auto"):
        self.A = sp.csr_matrix(A)
        self.At = self.A.T.tocsr()
        n = self.A.shape[1]
        if policy not in ("auto", "dense", "sparse"):
            raise ParameterDomainError(f"unknown A^T A policy {policy!r}")
        if policy == "auto":
            # dense matvec costs n^2 flops against 2*nnz for the sparse pair
            policy = "dense" if (n <= DENSE_ATA_MAX_N and n * n <= 2 * self.A.nnz) else "sparse"
        self.policy = policy
        self.AtA = None
        self._dense = None
        if policy == "dense":
            self.AtA = AtA if AtA is not None else np.asarray((self.At @ self.A).toarray())

    def __call__(self, x):
        if self.AtA is not None:
            return self.AtA @ x
        return self.At @ (self.A @ x)

    def dense(self) -> np.ndarray:
        if self.AtA is not None:
            return self.AtA
        if self._dense is None:
            self._dense = np.asarray((self.At @ self.A).toarray())
        return self._dense


class PrecisionContext:
    """Conditional Gaussian precision for fixed shrinkage parameters.

    Represents ``P = A^T A / sigma^2 + diag(lam) + Dh^T diag(lam_h) Dh + Dv^T diag(lam_v) Dv``
    together with the linear term ``b = A^T y / sigma^2``. The potential is
    ``U(x) = 0.5 x^T P x - b^T x`` (up to a constant).

    ``version`` counts how often the diagonal fields were replaced.
    """

    def __init__(self, normal: NormalOperator, At_y, sigma_obs: float, d: int,
                 lam_diag, lam_h_diag, lam_v_diag):
        if not sigma_obs > 0:
            raise ParameterDomainError(f"sigma_obs must be positive, got {sigma_obs}")
        self.normal = normal
        self.d = d
        self.n = d * d
        self.sigma_obs = float(sigma_obs)
        self.inv_var = 1.0 / self.sigma_obs**2
        At_y = np.asarray(At_y, dtype=float)
        if At_y.shape != (self.n,):
            raise ShapeError(f"A^T y has shape {At_y.shape}, expected ({self.n},)")
        self.rhs = self.inv_var * At_y
        self._store(lam_diag, lam_h_diag, lam_v_diag)
        self.version = 0

    @classmethod
    def from_model(cls, model, lam_diag, lam_h_diag, lam_v_diag, policy="auto"):
        """Build from a :class:`~gibbsbps.ct.ForwardModel` carrying data."""
        if model.At_y is None or model.sigma_obs is None:
            raise StateError("forward model has no measurements attached")
        normal = NormalOperator(model.A, model.AtA, policy)
        return cls(normal, model.At_y, model.sigma_obs, model.d, lam_diag, lam_h_diag, lam_v_diag)

    def set_diagonals(self, lam_diag, lam_h_diag, lam_v_diag):
        """Replace the three diagonal fields (after a shrinkage update)."""
        self._store(lam_diag, lam_h_diag, lam_v_diag)
        self.version += 1

    def _store(self, lam_diag, lam_h_diag, lam_v_diag):
        n, ne = self.n, self.d * (self.d - 1)
        fields = []
        for name, arr, size in (("lam", lam_diag, n), ("lam_h", lam_h_diag, ne), ("lam_v", lam_v_diag, ne)):
            arr = np.broadcast_to(np.asarray(arr, dtype=float), (size,)).copy()
            if not (np.all(arr > 0) and np.all(np.isfinite(arr))):
                raise StateError(f"{name} diagonal must be positive and finite")
            fields.append(arr)
        self.lam, self.lam_h, self.lam_v = fields

    def _diag_cols(self, x):
        if x.ndim == 1:
            return self.lam, self.lam_h, self.lam_v
        return self.lam[:, None], self.lam_h[:, None], self.lam_v[:, None]

    def apply_prior(self, x):
        """``(Lam + Dh^T Lam_h Dh + Dv^T Lam_v Dv) x`` in O(n)."""
        lam, lam_h, lam_v = self._diag_cols(x)
        d = self.d
        return (lam * x
                + apply_diff_h_t(lam_h * apply_diff_h(x, d), d)
                + apply_diff_v_t(lam_v * apply_diff_v(x, d), d))

    def apply(self, x):
        return self.inv_var * self.normal(x) + self.apply_prior(x)

    def dense(self) -> np.ndarray:
        """Materialize the precision as a dense ``n x n`` array."""
        Dh, Dv = kron_diff_h(self.d), kron_diff_v(self.d)
        prior = (sp.diags(self.lam) + Dh.T @ sp.diags(self.lam_h) @ Dh
                 + Dv.T @ sp.diags(self.lam_v) @ Dv)
        return self.inv_var * self.normal.dense() + prior.toarray()


class DensePrecision:
    """A Gaussian given directly by a dense precision matrix and linear term.

    Quacks like :class:`PrecisionContext` (``n``, ``rhs``, ``apply``,
    ``dense``) so the samplers can target arbitrary small Gaussians.
    """

    def __init__(self, matrix, rhs=None):
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.n = self.matrix.shape[0]
        if self.matrix.shape != (self.n, self.n):
            raise ShapeError(f"precision must be square, got {self.matrix.shape}")
        scale = max(1.0, float(np.abs(self.matrix).max()))
        if np.abs(self.matrix - self.matrix.T).max() > 1e-10 * scale:
            raise StateError("precision matrix is not symmetric")
        self.rhs = np.zeros(self.n) if rhs is None else np.asarray(rhs, dtype=float).reshape(self.n)

    @classmethod
    def from_moments(cls, mean, cov):
        """Precision ``cov^{-1}`` and linear term ``cov^{-1} mean``."""
        P = np.linalg.inv(np.atleast_2d(cov))
        P = 0.5 * (P + P.T)
        return cls(P, P @ np.atleast_1d(mean))

    def apply(self, x):
        return self.matrix @ x

    def dense(self) -> np.ndarray:
        return self.matrix


def apply_precision(x, ctx) -> np.ndarray:
    """Matrix-free product of the conditional precision with ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != ctx.n:
        raise ShapeError(f"expected leading dimension {ctx.n}, got {x.shape}")
    return ctx.apply(x)


def grad_potential(x, ctx) -> np.ndarray:
    """Gradient of the conditional potential: ``P x - A^T y / sigma^2``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (ctx.n,):
        raise ShapeError(f"expected shape ({ctx.n},), got {x.shape}")
    return apply_precision(x, ctx) - ctx.rhs


def potential(x, ctx) -> float:
    """``U(x) = 0.5 x^T P x - b^T x``.

    Equal to ``0.5 |y - A x|^2 / sigma^2 + 0.5 x^T (prior precision) x`` minus a
    constant independent of ``x``.
    """
    x = np.asarray(x, dtype=float)
    return 0.5 * float(x @ apply_precision(x, ctx)) - float(ctx.rhs @ x)
