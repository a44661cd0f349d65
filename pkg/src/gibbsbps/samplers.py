"""Top-level samplers: two-block Gibbs and Gibbs-BPS, plus trajectory estimators."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bps import EventKind, TrajectorySegment, arrival_time, reflect
from .ct import ForwardModel
from .distributions import RngStream, sample_open_uniform
from .errors import ParameterDomainError
from .gaussian_exact import sample_conditional_gaussian
from .metrics import psnr, ssim
from .operators import PrecisionContext, apply_precision, grad_potential
from .prior import HyperParams, ShrinkageState, update_shrinkage

DEFAULT_BURN_IN_FRAC = 0.2


@dataclass
class MomentAccumulator:
    """Running integrals of ``x`` and ``x**2`` along a trajectory.

    ``total_time`` counts all time seen, including the burn-in period; the sums
    only cover time after ``burn_in_time``.
    """

    sum_x: np.ndarray
    sum_x2: np.ndarray
    total_time: float = 0.0
    burn_in_time: float = 0.0

    @classmethod
    def zeros(cls, n: int, burn_in_time: float = 0.0) -> "MomentAccumulator":
        return cls(np.zeros(n), np.zeros(n), 0.0, burn_in_time)

    @property
    def effective_time(self) -> float:
        return self.total_time - min(self.burn_in_time, self.total_time)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combine independent chains by adding their integrals."""
        return MomentAccumulator(
            self.sum_x + other.sum_x,
            self.sum_x2 + other.sum_x2,
            self.effective_time + other.effective_time,
            0.0,
        )


_SPLITTER = 134217729.0  # 2**27 + 1


def _two_product(a, b):
    """Dekker's product: ``a * b == p + e`` exactly in floating point."""
    p = a * b
    c = _SPLITTER * a
    a_hi = c - (c - a)
    a_lo = a - a_hi
    c = _SPLITTER * b
    b_hi = c - (c - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def _add_integrals(acc, x, v, s):
    s2 = s * s
    # s times the segment midpoint; the half-step is carried exactly so a
    # midpoint near zero keeps its relative accuracy
    p, e = _two_product(v, 0.5 * s)
    acc.sum_x += s * ((x + p) + e)
    acc.sum_x2 += s * (x * x)
    acc.sum_x2 += s2 * (x * v)
    acc.sum_x2 += (s2 * s / 3.0) * (v * v)


def accumulate_segment(acc: MomentAccumulator, x, v, s: float) -> MomentAccumulator:
    """Add ``int_0^s phi(x + t v) dt`` for ``phi(x) = x`` and ``x**2``.

    Any part of the segment lying before ``acc.burn_in_time`` is skipped.
    Mutates and returns ``acc``.
    """
    if s < 0:
        raise ParameterDomainError(f"segment duration must be non-negative, got {s}")
    start = acc.total_time
    acc.total_time = start + s
    if acc.total_time <= acc.burn_in_time:
        return acc
    if start < acc.burn_in_time:
        skip = acc.burn_in_time - start
        x = x + skip * v
        s = s - skip
    _add_integrals(acc, x, v, s)
    return acc


def finalize_moments(acc: MomentAccumulator) -> tuple[np.ndarray, np.ndarray]:
    """Time-averaged posterior mean and standard deviation."""
    T = acc.effective_time
    if not T > 0:
        raise ParameterDomainError("no post-burn-in time accumulated")
    mean = acc.sum_x / T
    var = acc.sum_x2 / T - mean * mean
    return mean, np.sqrt(np.maximum(var, 0.0))


def segment_batch_moments(segments, n_batches: int):
    """Split a trajectory into ``n_batches`` equal-time windows.

    Returns arrays of per-window means and second moments, shape
    ``(n_batches, n)``; used for batch-means Monte Carlo standard errors.
    """
    total = sum(seg.s for seg in segments)
    width = total / n_batches
    n = segments[0].x_start.size
    means = np.zeros((n_batches, n))
    seconds = np.zeros((n_batches, n))
    k, acc, filled = 0, MomentAccumulator.zeros(n), 0.0
    for seg in segments:
        x, v, s = seg.x_start, seg.v, seg.s
        while s > 0 and k < n_batches:
            take = min(s, width - filled)
            _add_integrals(acc, x, v, take)
            filled += take
            x, s = x + take * v, s - take
            if filled >= width * (1 - 1e-12):
                means[k] = acc.sum_x / filled
                seconds[k] = acc.sum_x2 / filled
                k, acc, filled = k + 1, MomentAccumulator.zeros(n), 0.0
    if k < n_batches:
        means[k] = acc.sum_x / filled
        seconds[k] = acc.sum_x2 / filled
    return means, seconds


@dataclass
class TracePoint:
    wall_s: float
    psnr_db: float
    ssim: float


class ConvergenceTrace:
    """Posterior-mean quality against ground truth as a function of wall-clock time."""

    def __init__(self, truth: np.ndarray, probe_interval: float, t0: float | None = None):
        if not probe_interval > 0:
            raise ParameterDomainError(f"probe_interval must be positive, got {probe_interval}")
        self.truth = np.asarray(truth, dtype=float)
        self.d = self.truth.shape[0]
        self.probe_interval = float(probe_interval)
        self.next_probe = self.probe_interval
        self.t0 = time.perf_counter() if t0 is None else t0
        self.points: list[TracePoint] = []

    def record(self, mean: np.ndarray):
        img = mean.reshape(self.truth.shape)
        s = ssim(self.truth, img) if self.d >= 11 else float("nan")
        self.points.append(TracePoint(time.perf_counter() - self.t0, psnr(self.truth, img), s))

    def maybe_record(self, clock: float, acc: MomentAccumulator):
        """Probe whenever ``clock`` (post-burn-in time or iterations) passes the next mark."""
        if clock >= self.next_probe and acc.effective_time > 0:
            self.record(finalize_moments(acc)[0])
            self.next_probe = (math.floor(clock / self.probe_interval) + 1) * self.probe_interval

    def to_csv(self) -> str:
        lines = ["time_s,psnr_db,ssim"]
        lines += [f"{p.wall_s:.6f},{p.psnr_db:.6f},{p.ssim:.6f}" for p in self.points]
        return "\n".join(lines) + "\n"


def convergence_trace(points) -> list[tuple[float, float, float]]:
    """Plain ``(wall seconds, PSNR, SSIM)`` tuples from a run's trace."""
    if points is None:
        return []
    if isinstance(points, ConvergenceTrace):
        points = points.points
    return [(p.wall_s, p.psnr_db, p.ssim) for p in points]


# ---------------------------------------------------------------------------
# two-block Gibbs


@dataclass
class GibbsChainRecord:
    mean: np.ndarray
    std: np.ndarray
    iterations: int
    burn_in: int
    timestamps: np.ndarray
    accumulator: MomentAccumulator
    state: ShrinkageState
    x: np.ndarray
    samples: np.ndarray | None = None
    trace: ConvergenceTrace | None = None


def _context_for(model: ForwardModel, state: ShrinkageState, hyper: HyperParams, policy="auto"):
    return PrecisionContext.from_model(model, *state.precision_diagonals(hyper), policy=policy)


def gibbs_run(model: ForwardModel, hyper: HyperParams, iters: int, rng: RngStream,
              burn_in: int | None = None, truth=None, probe_interval: float | None = None,
              keep_samples: bool = False, state0: ShrinkageState | None = None) -> GibbsChainRecord:
    """Two-block Gibbs sampler: exact Gaussian image draw, then exact shrinkage draw.

    Posterior moments are streamed over iterations after ``burn_in``
    (default 20% of ``iters``). With ``truth`` and ``probe_interval`` the
    running posterior mean is scored every ``probe_interval`` iterations.
    """
    if iters < 1:
        raise ParameterDomainError(f"iters must be positive, got {iters}")
    if burn_in is None:
        burn_in = int(DEFAULT_BURN_IN_FRAC * iters)
    if not 0 <= burn_in < iters:
        raise ParameterDomainError(f"need 0 <= burn_in < iters, got {burn_in}, {iters}")
    d = model.d
    state = ShrinkageState.initial(d) if state0 is None else state0
    ctx = _context_for(model, state, hyper, policy="dense" if model.n <= 4096 else "auto")
    acc = MomentAccumulator.zeros(model.n, burn_in_time=float(burn_in))
    zero_v = np.zeros(model.n)
    trace = None
    t0 = time.perf_counter()
    if truth is not None and probe_interval:
        trace = ConvergenceTrace(truth, probe_interval, t0)
    stamps = np.empty(iters)
    kept = np.empty((iters - burn_in, model.n)) if keep_samples else None
    x = np.zeros(model.n)
    for it in range(iters):
        x = sample_conditional_gaussian(ctx, rng)
        state = update_shrinkage(x, state, hyper, rng, d)
        ctx.set_diagonals(*state.precision_diagonals(hyper))
        accumulate_segment(acc, x, zero_v, 1.0)
        if kept is not None and it >= burn_in:
            kept[it - burn_in] = x
        stamps[it] = time.perf_counter() - t0
        if trace is not None:
            trace.maybe_record(acc.effective_time, acc)
    mean, std = finalize_moments(acc)
    if trace is not None:
        trace.record(mean)
    return GibbsChainRecord(mean, std, iters, burn_in, stamps, acc, state, x, kept, trace)


# ---------------------------------------------------------------------------
# Gibbs-BPS


class GibbsBPS:
    """Gibbs-BPS process state: image, velocity, shrinkage parameters, clock.

    Bounces and refreshes move the image under the conditional Gaussian for the
    current shrinkage parameters; an independent rate-``eta`` clock triggers an
    exact redraw of the shrinkage parameters given the current image.
    """

    def __init__(self, model: ForwardModel, hyper: HyperParams, rng: RngStream,
                 lambda_ref: float = 10.0, eta: float = 100.0, x0=None, v0=None,
                 state0: ShrinkageState | None = None, policy: str = "auto"):
        if not lambda_ref > 0 or not eta > 0:
            raise ParameterDomainError("lambda_ref and eta must be positive")
        self.model = model
        self.hyper = hyper
        self.rng = rng
        self.lambda_ref = float(lambda_ref)
        self.eta = float(eta)
        self.d = model.d
        self.n = model.n
        self.state = ShrinkageState.initial(self.d) if state0 is None else state0
        self.ctx = _context_for(model, self.state, hyper, policy)
        self.x = np.zeros(self.n) if x0 is None else np.array(x0, dtype=float)
        self.v = rng.standard_normal(self.n) if v0 is None else np.array(v0, dtype=float)
        self.t = 0.0
        self.counts = {kind: 0 for kind in EventKind}
        self.g = grad_potential(self.x, self.ctx)
        self.w = apply_precision(self.v, self.ctx)

    def step(self, t_max: float = math.inf):
        """Advance to the next event, or to ``t_max`` if that comes first.

        Returns ``(x_start, v, s, kind)`` describing the segment just travelled;
        ``kind`` is ``None`` when the clock was stopped at ``t_max``.
        """
        rng = self.rng
        c1 = float(self.v @ self.g)
        c2 = float(self.v @ self.w)
        s_bounce = arrival_time(c1, c2, sample_open_uniform(rng))
        s_ref = -math.log(sample_open_uniform(rng)) / self.lambda_ref
        s_gibbs = -math.log(sample_open_uniform(rng)) / self.eta
        if s_bounce <= s_ref and s_bounce <= s_gibbs:
            s, kind = s_bounce, EventKind.BOUNCE
        elif s_ref <= s_gibbs:
            s, kind = s_ref, EventKind.REFRESH
        else:
            s, kind = s_gibbs, EventKind.GIBBS
        if self.t + s > t_max:
            # all clocks are memoryless, so stopping early and redrawing later is exact
            s, kind = max(t_max - self.t, 0.0), None
        x_start, v_start = self.x, self.v
        self.x = x_start + s * v_start
        self.t += s
        if kind is not None:
            self.counts[kind] += 1
        ctx = self.ctx
        if kind is EventKind.BOUNCE:
            self.g = grad_potential(self.x, ctx)
            self.v = reflect(v_start, self.g)
            self.w = apply_precision(self.v, ctx)
        elif kind is EventKind.REFRESH:
            self.g = grad_potential(self.x, ctx)
            self.v = rng.standard_normal(self.n)
            self.w = apply_precision(self.v, ctx)
        elif kind is EventKind.GIBBS:
            self.state = update_shrinkage(self.x, self.state, self.hyper, rng, self.d)
            ctx.set_diagonals(*self.state.precision_diagonals(self.hyper))
            self.g = grad_potential(self.x, ctx)
            self.w = apply_precision(self.v, ctx)
        else:
            self.g = grad_potential(self.x, ctx)
        return x_start, v_start, s, kind

    def run_for(self, duration: float):
        """Advance the clock by exactly ``duration``; returns the list of events."""
        t_end = self.t + duration
        kinds = []
        while self.t < t_end:
            kinds.append(self.step(t_end)[3])
        return kinds


@dataclass
class GibbsBPSResult:
    accumulator: MomentAccumulator
    counts: dict
    mean: np.ndarray
    std: np.ndarray
    trajectory_time: float
    n_events: int
    context_rebuilds: int
    sampler: GibbsBPS = field(repr=False)
    trace: ConvergenceTrace | None = None
    segments: list | None = field(default=None, repr=False)


def gibbs_bps_run(model: ForwardModel, hyper: HyperParams, rng: RngStream,
                  T: float | None = None, max_events: int | None = None,
                  lambda_ref: float = 10.0, eta: float = 100.0,
                  burn_in_frac: float = DEFAULT_BURN_IN_FRAC, truth=None,
                  probe_interval: float | None = None, keep_segments: bool = False,
                  x0=None, state0: ShrinkageState | None = None, policy: str = "auto",
                  ) -> GibbsBPSResult:
    """Run Gibbs-BPS until trajectory time ``T`` or ``max_events`` events.

    Whichever budget is hit first ends the run; the final segment is truncated
    at ``T``. Burn-in is the first ``burn_in_frac * T`` of trajectory time when
    ``T`` is given, otherwise the first ``burn_in_frac * max_events`` events.
    ``probe_interval`` is in units of post-burn-in trajectory time.
    """
    if T is None and max_events is None:
        raise ParameterDomainError("give a trajectory length T, an event budget, or both")
    if T is not None and not T > 0:
        raise ParameterDomainError(f"T must be positive, got {T}")
    if max_events is not None and max_events < 1:
        raise ParameterDomainError(f"max_events must be positive, got {max_events}")
    if not 0.0 <= burn_in_frac < 1.0:
        raise ParameterDomainError(f"burn_in_frac must lie in [0, 1), got {burn_in_frac}")
    sampler = GibbsBPS(model, hyper, rng, lambda_ref, eta, x0=x0, state0=state0, policy=policy)
    t_max = math.inf if T is None else float(T)
    ev_max = math.inf if max_events is None else int(max_events)
    if T is not None:
        acc = MomentAccumulator.zeros(model.n, burn_in_frac * t_max)
        burn_events = None
    else:
        acc = MomentAccumulator.zeros(model.n, math.inf)
        burn_events = int(burn_in_frac * ev_max)
        if burn_events == 0:
            acc.burn_in_time = 0.0
    trace = None
    if truth is not None and probe_interval:
        trace = ConvergenceTrace(truth, probe_interval)
    segments = [] if keep_segments else None
    n_events = 0
    while sampler.t < t_max and n_events < ev_max:
        x, v, s, kind = sampler.step(t_max)
        accumulate_segment(acc, x, v, s)
        if segments is not None:
            segments.append(TrajectorySegment(x, v, s))
        if kind is None:
            break
        n_events += 1
        if burn_events is not None and n_events == burn_events:
            acc.burn_in_time = acc.total_time
        if trace is not None:
            trace.maybe_record(acc.effective_time, acc)
    if n_events >= 1000 and min(sampler.counts.values()) == 0:
        missing = [k.value for k, c in sampler.counts.items() if c == 0]
        warnings.warn(f"no {', '.join(missing)} events in {n_events} events", RuntimeWarning)
    mean, std = finalize_moments(acc)
    if trace is not None:
        trace.record(mean)
    return GibbsBPSResult(acc, dict(sampler.counts), mean, std, sampler.t, n_events,
                          sampler.ctx.version, sampler, trace, segments)
