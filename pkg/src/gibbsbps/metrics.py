"""Image quality metrics against a ground truth image."""

from __future__ import annotations

import numpy as np
from scipy.signal import correlate2d

from .errors import ShapeError

PSNR_CAP = 100.0


def _pair(truth, estimate):
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise ShapeError(f"shape mismatch: truth {truth.shape} vs estimate {estimate.shape}")
    return truth, estimate


def psnr(truth, estimate) -> float:
    """Peak signal-to-noise ratio in dB with peak = max of the truth.

    Returns 100 dB for identical images.
    """
    truth, estimate = _pair(truth, estimate)
    mse = float(np.mean((truth - estimate) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    peak = float(truth.max())
    return min(PSNR_CAP, 10.0 * np.log10(peak * peak / mse))


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _filter_valid(img, win):
    return correlate2d(img, win, mode="valid")


def ssim(truth, estimate, win_size: int = 11, sigma: float = 1.5,
         k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean structural similarity over all fully-contained Gaussian windows.

    Dynamic range ``L`` is the maximum of the truth image.
    """
    truth, estimate = _pair(truth, estimate)
    if truth.ndim != 2:
        raise ShapeError(f"ssim expects 2-D images, got shape {truth.shape}")
    if min(truth.shape) < win_size:
        raise ShapeError(f"images of shape {truth.shape} are smaller than the {win_size}x{win_size} window")
    if np.array_equal(truth, estimate):
        return 1.0
    L = float(truth.max())
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    win = gaussian_window(win_size, sigma)
    mu_x = _filter_valid(truth, win)
    mu_y = _filter_valid(estimate, win)
    sxx = _filter_valid(truth * truth, win) - mu_x**2
    syy = _filter_valid(estimate * estimate, win) - mu_y**2
    sxy = _filter_valid(truth * estimate, win) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))
