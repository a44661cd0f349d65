"""Experiment configuration: one flat dataclass, read from ``key = value`` text.

Precedence is defaults < config file < command-line flags. The resolved
configuration is written next to the outputs so a run can be repeated with
``--config <out>/config.txt``.
"""

from __future__ import annotations

import types
import typing
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ParameterDomainError
from .prior import HyperParams

PHANTOM_KINDS = ("shepp-logan", "grains")
SAMPLER_KINDS = ("gibbs", "gibbs-bps")
NOISE_MODES = ("inf-norm", "rms")


@dataclass(frozen=True)
class ExperimentConfig:
    # phantom
    kind: str = "shepp-logan"
    d: int = 64
    n_grains: int = 40
    phantom_seed: int = 0
    # acquisition
    n_angles: int | None = None
    noise_mode: str = "inf-norm"
    noise_level: float = 0.01
    # prior
    gamma1: int = 1
    gamma2: int = 1
    a1: float = 1.0
    b1: float = 1.0
    a2: float = 1.0
    b2: float = 1.0
    a3: float = 1.0
    b3: float = 1.0
    # sampler
    sampler: str = "gibbs-bps"
    iters: int = 5000
    events: int | None = 600000
    traj_time: float | None = None
    eta: float = 100.0
    lambda_ref: float = 10.0
    burn_in: int | None = None
    burn_in_frac: float = 0.2
    chains: int = 1
    seed: int = 0
    # io
    phantom: str | None = None
    sinogram: str | None = None
    truth: str | None = None
    out: str = "out"
    probe_interval: float | None = None

    @property
    def angles(self) -> int:
        """Number of projections; defaults to ``d // 2``."""
        return self.n_angles if self.n_angles is not None else max(1, self.d // 2)

    def hyper(self) -> HyperParams:
        return HyperParams(self.gamma1, self.gamma2, self.a1, self.b1, self.a2, self.b2, self.a3, self.b3)

    def validate(self) -> "ExperimentConfig":
        """Check every value against the preconditions of the code that will use it."""
        def need(cond, msg):
            if not cond:
                raise ParameterDomainError(msg)

        need(self.kind in PHANTOM_KINDS, f"kind must be one of {PHANTOM_KINDS}, got {self.kind!r}")
        need(self.d >= 2, f"d must be at least 2, got {self.d}")
        need(self.kind != "shepp-logan" or self.d >= 8, "shepp-logan needs d >= 8")
        need(self.n_grains >= 1, f"n_grains must be positive, got {self.n_grains}")
        need(self.n_angles is None or self.n_angles >= 1, f"n_angles must be positive, got {self.n_angles}")
        need(self.noise_mode in NOISE_MODES, f"noise_mode must be one of {NOISE_MODES}, got {self.noise_mode!r}")
        need(self.noise_level > 0, f"noise_level must be positive, got {self.noise_level}")
        self.hyper()
        need(self.sampler in SAMPLER_KINDS, f"sampler must be one of {SAMPLER_KINDS}, got {self.sampler!r}")
        need(self.iters >= 1, f"iters must be positive, got {self.iters}")
        need(self.burn_in is None or 0 <= self.burn_in < self.iters, "need 0 <= burn_in < iters")
        need(self.events is None or self.events >= 1, f"events must be positive, got {self.events}")
        need(self.traj_time is None or self.traj_time > 0, f"traj_time must be positive, got {self.traj_time}")
        need(self.sampler != "gibbs-bps" or self.events is not None or self.traj_time is not None,
             "gibbs-bps needs an event budget or a trajectory length")
        need(self.eta > 0 and self.lambda_ref > 0, "eta and lambda_ref must be positive")
        need(0.0 <= self.burn_in_frac < 1.0, f"burn_in_frac must lie in [0, 1), got {self.burn_in_frac}")
        need(self.chains >= 1, f"chains must be positive, got {self.chains}")
        need(0 <= self.seed < 2**64 and 0 <= self.phantom_seed < 2**64, "seeds must be unsigned 64-bit")
        need(self.probe_interval is None or self.probe_interval > 0, "probe_interval must be positive")
        return self

    def to_text(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            lines.append(f"{key} = {'none' if value is None else value}")
        return "\n".join(lines) + "\n"

    def with_updates(self, updates: dict) -> "ExperimentConfig":
        """Apply ``{key: value}`` where values may still be strings."""
        known = {f.name for f in fields(self)}
        hints = typing.get_type_hints(type(self))
        clean = {}
        for key, value in updates.items():
            key = key.replace("-", "_")
            if key not in known:
                raise ParameterDomainError(f"unknown config key {key!r}")
            clean[key] = _coerce(key, value, hints[key])
        return replace(self, **clean)


def _coerce(key, value, hint):
    allowed = typing.get_args(hint) if isinstance(hint, types.UnionType) else (hint,)
    if isinstance(value, str):
        text = value.strip()
        if type(None) in allowed and text.lower() in ("none", ""):
            return None
        for typ in allowed:
            if typ is type(None):
                continue
            try:
                if typ is int:
                    return _parse_int(text)
                return typ(text)
            except ValueError:
                continue
        raise ParameterDomainError(f"config key {key!r}: cannot parse {value!r}")
    if value is None and type(None) not in allowed:
        raise ParameterDomainError(f"config key {key!r} may not be none")
    return value


def _parse_int(text):
    try:
        return int(text)
    except ValueError:
        # accept "6e5" style budgets, but only when they are whole numbers
        value = float(text)
        if not value.is_integer():
            raise
        return int(value)


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterDomainError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParameterDomainError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if path is not None:
        cfg = cfg.with_updates(parse_config_text(Path(path).read_text()))
    if overrides:
        cfg = cfg.with_updates({k: v for k, v in overrides.items() if v is not None})
    return cfg
