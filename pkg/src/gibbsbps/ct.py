"""Synthetic parallel-beam CT: phantoms, a Siddon-type system matrix, noise.

Geometry
--------
The image occupies the square [-1, 1]^2. Pixel ``(i, j)`` (row ``i``, column
``j``, row-major index ``i*d + j``) covers ``x in [-1 + j h, -1 + (j+1) h]`` and
``y in [1 - (i+1) h, 1 - i h]`` with ``h = 2/d``, i.e. row 0 is the top of the
image. A ray at angle ``phi`` and detector offset ``s`` is the line
``s*theta + t*theta_perp`` with ``theta = (cos phi, sin phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .distributions import RngStream, make_rng
from .errors import ParameterDomainError, ShapeError

# Modified (high-contrast) Shepp-Logan table:
# intensity, semi-axis a, semi-axis b, centre x, centre y, rotation (degrees)
_SHEPP_LOGAN_MODIFIED = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


@dataclass(frozen=True)
class ForwardModel:
    """System matrix plus (optionally) the data it was used to generate.

    ``A`` is a CSR matrix of shape ``(n_angles * n_detectors, d*d)``; row
    ``k*n_detectors + r`` is the ray at angle ``k`` and detector ``r``.
    """

    A: sp.csr_matrix
    d: int
    n_angles: int
    n_detectors: int
    y: np.ndarray | None = None
    sigma_obs: float | None = None
    At_y: np.ndarray | None = field(default=None, repr=False)
    AtA: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def with_data(self, y, sigma_obs: float) -> "ForwardModel":
        """Attach measurements; recomputes ``A^T y``."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ShapeError(f"measurement length {y.shape} does not match m={self.m}")
        if not sigma_obs > 0:
            raise ParameterDomainError(f"sigma_obs must be positive, got {sigma_obs}")
        return replace(self, y=y, sigma_obs=float(sigma_obs), At_y=self.A.T @ y)

    def with_cached_ata(self) -> "ForwardModel":
        """Return a copy carrying the dense ``A^T A``."""
        if self.AtA is not None:
            return self
        return replace(self, AtA=np.asarray((self.A.T @ self.A).toarray()))


@dataclass(frozen=True)
class Sinogram:
    y: np.ndarray
    n_angles: int
    n_detectors: int
    sigma_obs: float

    def as_image(self) -> np.ndarray:
        return self.y.reshape(self.n_angles, self.n_detectors)


def pixel_centers(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X, Y)`` coordinate grids of pixel centres, each ``d x d``."""
    h = 2.0 / d
    c = -1.0 + h * (np.arange(d) + 0.5)
    return np.meshgrid(c, -c)


def phantom_shepp_logan(d: int) -> np.ndarray:
    """Rasterize the modified Shepp-Logan phantom at pixel centres.

    Returns a ``d x d`` array with values in [0, 1].
    """
    if d < 8:
        raise ParameterDomainError(f"phantom needs d >= 8, got {d}")
    X, Y = pixel_centers(d)
    img = np.zeros((d, d))
    for val, a, b, x0, y0, deg in _SHEPP_LOGAN_MODIFIED:
        th = np.deg2rad(deg)
        c, s = np.cos(th), np.sin(th)
        xr = (X - x0) * c + (Y - y0) * s
        yr = -(X - x0) * s + (Y - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += val
    # 1 - 0.8 - 0.2 leaves rounding residue in the ventricles
    img[np.abs(img) < 1e-12] = 0.0
    return np.clip(img, 0.0, 1.0)


def phantom_grains(d: int, n_grains: int, seed: int) -> np.ndarray:
    """Seeded Voronoi "grains" inside the unit disk.

    ``n_grains`` centres are drawn uniformly in the unit disk and each cell gets
    an independent Uniform(0, 1) intensity; pixels outside the disk are 0.
    """
    if d < 8:
        raise ParameterDomainError(f"phantom needs d >= 8, got {d}")
    if n_grains < 1:
        raise ParameterDomainError(f"n_grains must be >= 1, got {n_grains}")
    rng = make_rng(seed)
    r = np.sqrt(rng.random(n_grains))
    ang = 2 * np.pi * rng.random(n_grains)
    centers = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
    levels = rng.random(n_grains)
    labels = grain_labels(d, centers)
    img = np.where(labels >= 0, levels[np.maximum(labels, 0)], 0.0)
    return img


def grain_labels(d: int, centers: np.ndarray) -> np.ndarray:
    """Nearest-centre label per pixel, ``-1`` outside the unit disk."""
    X, Y = pixel_centers(d)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    labels = d2.argmin(axis=1)
    labels[(pts**2).sum(1) >= 1.0] = -1
    return labels.reshape(d, d)


def _ray_segments(p0, direction, d):
    """Intersection lengths of one line with the pixel grid (Siddon).

    The line is ``p0 + t*direction`` with ``|direction| = 1``. Returns
    ``(flat pixel indices, lengths)``.
    """
    h = 2.0 / d
    grid = np.linspace(-1.0, 1.0, d + 1)
    ts = []
    t_lo, t_hi = -np.inf, np.inf
    for ax in range(2):
        if abs(direction[ax]) < 1e-15:
            if not -1.0 <= p0[ax] <= 1.0:
                return np.empty(0, dtype=np.int64), np.empty(0)
            continue
        tt = (grid - p0[ax]) / direction[ax]
        t_lo = max(t_lo, tt.min())
        t_hi = min(t_hi, tt.max())
        ts.append(tt)
    if not t_hi > t_lo:
        return np.empty(0, dtype=np.int64), np.empty(0)
    t = np.concatenate(ts + [np.array([t_lo, t_hi])])
    t = np.unique(t[(t >= t_lo) & (t <= t_hi)])
    lengths = np.diff(t)
    keep = lengths > 1e-13
    mid = 0.5 * (t[:-1] + t[1:])[keep]
    lengths = lengths[keep]
    px = p0[0] + mid * direction[0]
    py = p0[1] + mid * direction[1]
    col = np.clip(np.floor((px + 1.0) / h).astype(np.int64), 0, d - 1)
    row = np.clip(np.floor((1.0 - py) / h).astype(np.int64), 0, d - 1)
    return row * d + col, lengths


def detector_offsets(n_detectors: int) -> np.ndarray:
    """Detector centres spanning [-1, 1] at pitch ``2 / n_detectors``."""
    return -1.0 + (2.0 / n_detectors) * (np.arange(n_detectors) + 0.5)


def projection_angles(n_angles: int) -> np.ndarray:
    return np.pi * np.arange(n_angles) / n_angles


def build_radon(d: int, n_angles: int, n_detectors: int | None = None) -> ForwardModel:
    """Assemble the parallel-beam system matrix with exact intersection lengths."""
    if d < 2:
        raise ParameterDomainError(f"d must be >= 2, got {d}")
    if n_angles < 1:
        raise ParameterDomainError(f"n_angles must be >= 1, got {n_angles}")
    n_det = d if n_detectors is None else int(n_detectors)
    offsets = detector_offsets(n_det)
    rows, cols, vals = [], [], []
    for k, phi in enumerate(projection_angles(n_angles)):
        theta = np.array([np.cos(phi), np.sin(phi)])
        perp = np.array([-np.sin(phi), np.cos(phi)])
        for r, s in enumerate(offsets):
            idx, lengths = _ray_segments(s * theta, perp, d)
            rows.append(np.full(idx.size, k * n_det + r, dtype=np.int64))
            cols.append(idx)
            vals.append(lengths)
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_angles * n_det, d * d),
    )
    A.sum_duplicates()
    return ForwardModel(A=A, d=d, n_angles=n_angles, n_detectors=n_det)


def chord_length(phi: float, s: float) -> float:
    """Length of the ray ``(phi, s)`` inside [-1, 1]^2, computed geometrically."""
    theta = np.array([np.cos(phi), np.sin(phi)])
    perp = np.array([-np.sin(phi), np.cos(phi)])
    p0 = s * theta
    lo, hi = -np.inf, np.inf
    for ax in range(2):
        if abs(perp[ax]) < 1e-15:
            if not -1.0 <= p0[ax] <= 1.0:
                return 0.0
            continue
        a, b = sorted(((-1.0 - p0[ax]) / perp[ax], (1.0 - p0[ax]) / perp[ax]))
        lo, hi = max(lo, a), min(hi, b)
    return max(0.0, hi - lo)


def noise_sigma(Ax: np.ndarray, noise_mode: str, noise_level: float) -> float:
    """Noise standard deviation relative to the clean projections."""
    if not noise_level > 0:
        raise ParameterDomainError(f"noise_level must be positive, got {noise_level}")
    if noise_mode == "inf-norm":
        return noise_level * float(np.max(np.abs(Ax)))
    if noise_mode == "rms":
        return noise_level * float(np.linalg.norm(Ax)) / np.sqrt(Ax.size)
    raise ParameterDomainError(f"unknown noise mode {noise_mode!r} (expected 'inf-norm' or 'rms')")


def simulate_measurement(
    model: ForwardModel,
    truth: np.ndarray,
    noise_mode: str,
    noise_level: float,
    rng: RngStream,
) -> tuple[Sinogram, ForwardModel]:
    """Return ``y = A x + e`` and the model with ``y`` and ``sigma_obs`` attached."""
    x = np.asarray(truth, dtype=float).ravel()
    if x.size != model.n:
        raise ShapeError(f"image of {x.size} pixels does not match model with n={model.n}")
    Ax = model.A @ x
    sigma = noise_sigma(Ax, noise_mode, noise_level)
    y = Ax + sigma * rng.standard_normal(Ax.size)
    return Sinogram(y, model.n_angles, model.n_detectors, sigma), model.with_data(y, sigma)
