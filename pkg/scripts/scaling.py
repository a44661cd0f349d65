"""Per-iteration Gibbs cost against per-event Gibbs-BPS cost as the grid grows.

    python scripts/scaling.py --sides 16 32 64 > scaling.csv
"""

import argparse
import math
import sys
import time
import warnings

import numpy as np

from gibbsbps import HyperParams, build_radon, gibbs_bps_run, gibbs_run, simulate_measurement
from gibbsbps.ct import phantom_shepp_logan
from gibbsbps.distributions import make_rng
from gibbsbps.gaussian_exact import MAX_DENSE_N


def measure(d, gibbs_iters, events, lambda_ref):
    truth = phantom_shepp_logan(d)
    _, model = simulate_measurement(build_radon(d, d // 2), truth, "inf-norm", 0.01, make_rng(0))
    hyper = HyperParams()
    per_iter = math.nan
    if d * d <= MAX_DENSE_N:
        rec = gibbs_run(model, hyper, gibbs_iters, make_rng(1))
        per_iter = float(np.median(np.diff(rec.timestamps)))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        gibbs_bps_run(model, hyper, make_rng(1), max_events=events, lambda_ref=lambda_ref)
    return per_iter, (time.perf_counter() - t0) / events


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--sides", type=int, nargs="+", default=[16, 32, 64])
    parser.add_argument("--gibbs-iters", type=int, default=5)
    parser.add_argument("--events", type=int, default=4000)
    parser.add_argument("--lambda-ref", type=float, default=100.0)
    args = parser.parse_args(argv)

    print("d,n,gibbs_s_per_iter,bps_s_per_event,ratio")
    for d in args.sides:
        g, b = measure(d, args.gibbs_iters, args.events, args.lambda_ref)
        print(f"{d},{d * d},{g:.6g},{b:.6g},{g / b:.6g}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
