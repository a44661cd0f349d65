"""How long Gibbs-BPS takes to leave its cold-start transient, for several ``lambda_ref``.

From ``x = 0`` with unit shrinkage parameters the chain can spend a long
time in a rough, weakly regularized region before it reaches the posterior
bulk. The time to get there shrinks sharply as ``lambda_ref`` grows. For
each value this prints the trajectory time and event count at which the
running mean (no burn-in) first reaches ``--target`` dB.

    python scripts/lambda_ref_transient.py --d 16 --lambda-refs 1 10 100
"""

import argparse
import sys
import warnings

from gibbsbps import GibbsBPS, HyperParams, build_radon, psnr, simulate_measurement
from gibbsbps.ct import phantom_shepp_logan
from gibbsbps.distributions import make_rng
from gibbsbps.samplers import MomentAccumulator, accumulate_segment, finalize_moments


def escape(model, truth, lambda_ref, seed, horizon, target, window):
    sampler = GibbsBPS(model, HyperParams(), make_rng(seed), lambda_ref=lambda_ref)
    d = model.d
    events = 0
    while sampler.t < horizon:
        # score the trajectory of the last ``window`` time units only
        acc = MomentAccumulator.zeros(model.n)
        start = sampler.t
        while sampler.t < start + window:
            x, v, s, _ = sampler.step(start + window)
            accumulate_segment(acc, x, v, s)
            events += 1
        score = psnr(truth, finalize_moments(acc)[0].reshape(d, d))
        if score >= target:
            return sampler.t, events, score
    return None, events, score


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--d", type=int, default=16)
    parser.add_argument("--lambda-refs", type=float, nargs="+", default=[1.0, 10.0, 100.0])
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--horizon", type=float, default=200.0)
    parser.add_argument("--window", type=float, default=2.0)
    parser.add_argument("--target", type=float, default=25.0, help="PSNR (dB) that counts as escaped")
    args = parser.parse_args(argv)

    truth = phantom_shepp_logan(args.d)
    _, model = simulate_measurement(build_radon(args.d, args.d // 2), truth, "inf-norm", 0.01, make_rng(0))
    print("lambda_ref,seed,escape_time,events,window_psnr_db")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for lam in args.lambda_refs:
            for seed in args.seeds:
                t, n, score = escape(model, truth, lam, seed, args.horizon, args.target, args.window)
                t_text = "none" if t is None else f"{t:.2f}"
                print(f"{lam:g},{seed},{t_text},{n},{score:.2f}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
