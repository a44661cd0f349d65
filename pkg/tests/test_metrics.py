import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gibbsbps.errors import ShapeError
from gibbsbps.metrics import gaussian_window, psnr, ssim


def ssim_reference(x, y, k1=0.01, k2=0.03):
    """Straightforward loop over every fully contained 11 x 11 window."""
    w = np.zeros((11, 11))
    for i in range(11):
        for j in range(11):
            w[i, j] = math.exp(-((i - 5) ** 2 + (j - 5) ** 2) / (2 * 1.5**2))
    w /= w.sum()
    L = x.max()
    c1, c2 = (k1 * L) ** 2, (k2 * L) ** 2
    vals = []
    for i in range(x.shape[0] - 10):
        for j in range(x.shape[1] - 10):
            a, b = x[i:i + 11, j:j + 11], y[i:i + 11, j:j + 11]
            ma, mb = (w * a).sum(), (w * b).sum()
            va = (w * a * a).sum() - ma**2
            vb = (w * b * b).sum() - mb**2
            cov = (w * a * b).sum() - ma * mb
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_psnr_hand_value():
    assert psnr(np.array([1.0, 0.0]), np.array([0.9, 0.0])) == pytest.approx(10 * math.log10(200), abs=1e-12)
    assert round(psnr(np.array([1.0, 0.0]), np.array([0.9, 0.0])), 4) == 23.0103


def test_psnr_identical_is_capped():
    x = np.random.default_rng(0).random((5, 5))
    assert psnr(x, x) == 100.0


def test_psnr_depends_on_truth_peak():
    x = np.array([[1.0, 0.0]])
    e = np.array([[0.9, 0.0]])
    assert psnr(x + 1, e + 1) != psnr(x, e)
    assert psnr(x + 1, e + 1) == psnr(x + 1, e + 1)


def test_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 2\).*\(3, 3\)"):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ShapeError):
        ssim(np.zeros((12, 12)), np.zeros((12, 13)))


def test_window_normalized():
    w = gaussian_window()
    assert w.shape == (11, 11) and w.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(w, w.T)


def test_ssim_matches_direct_loop():
    rng = np.random.default_rng(1)
    x = rng.random((32, 32))
    y = np.clip(x + 0.1 * rng.standard_normal((32, 32)), 0, None)
    assert abs(ssim(x, y) - ssim_reference(x, y)) < 1e-9


def test_ssim_identity_and_offset():
    x = np.random.default_rng(2).random((16, 16))
    assert ssim(x, x) == 1.0
    assert ssim(x, x + 5.0) < 1.0


def test_ssim_too_small():
    with pytest.raises(ShapeError):
        ssim(np.ones((8, 8)), np.ones((8, 8)))


@given(seed=st.integers(0, 2**32 - 1), noise=st.floats(0.01, 1.0))
@settings(max_examples=25, deadline=None)
def test_ssim_symmetric_and_bounded(seed, noise):
    rng = np.random.default_rng(seed)
    x = rng.random((16, 16)) + 0.1
    y = x + noise * rng.standard_normal((16, 16))
    s = ssim(x, y)
    assert -1.0 <= s <= 1.0
    # the constants depend on max(truth), so swap only with equal peaks
    y2 = y * (x.max() / y.max())
    assert ssim(x, y2) == pytest.approx(ssim(y2, x), rel=1e-9)
