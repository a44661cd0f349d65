"""Bayesian CT reconstruction with the fused L1/2 prior.

Two posterior samplers share one model: an exact two-block Gibbs sampler and
Gibbs-BPS, a bouncy particle sampler whose shrinkage parameters are refreshed
by Gibbs moves at the events of an independent Poisson clock.
"""

from .ct import ForwardModel, Sinogram, build_radon, phantom_grains, phantom_shepp_logan, simulate_measurement
from .metrics import psnr, ssim
from .prior import HyperParams, ShrinkageState
from .samplers import GibbsBPS, gibbs_bps_run, gibbs_run

__all__ = [
    "ForwardModel",
    "GibbsBPS",
    "HyperParams",
    "ShrinkageState",
    "Sinogram",
    "build_radon",
    "gibbs_bps_run",
    "gibbs_run",
    "phantom_grains",
    "phantom_shepp_logan",
    "psnr",
    "simulate_measurement",
    "ssim",
]

__version__ = "0.1.0"
