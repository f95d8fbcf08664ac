"""Run configuration: YAML/JSON key-value files with CLI overrides.

Schema (every key optional; defaults in brackets)::

    excess_drift: 0.0811        # model constants [calibrated values]
    kappa: 0.3374
    theta: 27.9345
    delta: 0.6503
    rho: 0.5241
    utility:
      variant: power            # power | mixture
      gamma: 3.0                # power only
      gamma1: 3.0               # mixture only
      gamma2: 1.5
    grid:
      alpha: 0.5
      horizon: 1.0
      j_count: 200
      safety: 0.5
    scenarios:
      y_multipliers: [1.0, 1.05, 0.95]   # y = multiplier * theta
      m: 1.0
    mc:
      paths: 100000
      steps: 500
      seed: 0
      initial_xi: 0.75
      initial_m: 1.0
      y_multiplier: 1.0
      freeze_volatility: false
      antithetic: false
      order: zeroth             # strategy fed to the rollout: zeroth | first
    output_dir: out
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from drawdown_sv.errors import ConfigurationError
from drawdown_sv.market_model import CALIBRATED, ModelParams, UtilitySpec
from drawdown_sv.mesh import DEFAULT_ALPHA, DEFAULT_HORIZON, DEFAULT_J, DEFAULT_SAFETY

OUTPUT_ENV = "DRAWDOWN_SV_OUTPUT_DIR"


@dataclass(frozen=True)
class GridSpec:
    alpha: float = DEFAULT_ALPHA
    horizon: float = DEFAULT_HORIZON
    j_count: int = DEFAULT_J
    safety: float = DEFAULT_SAFETY


@dataclass(frozen=True)
class ScenarioSpec:
    y_multipliers: tuple[float, ...] = (1.0, 1.05, 0.95)
    m: float = 1.0

    def __post_init__(self):
        if not self.y_multipliers or any(not v > 0 for v in self.y_multipliers):
            raise ConfigurationError("scenario multipliers must be > 0")
        if not self.m > 0:
            raise ConfigurationError("m must be > 0")


@dataclass(frozen=True)
class McSpec:
    paths: int = 100_000
    steps: int = 500
    seed: int = 0
    initial_xi: float = 0.75
    initial_m: float = 1.0
    y_multiplier: float = 1.0
    freeze_volatility: bool = False
    antithetic: bool = False
    order: str = "zeroth"

    def __post_init__(self):
        if self.order not in ("zeroth", "first"):
            raise ConfigurationError("mc.order must be 'zeroth' or 'first'")
        if self.paths < 1 or self.steps < 1:
            raise ConfigurationError("mc.paths and mc.steps must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams.calibrated)
    utility: UtilitySpec = field(default_factory=lambda: UtilitySpec.power(3.0))
    grid: GridSpec = field(default_factory=GridSpec)
    scenarios: ScenarioSpec = field(default_factory=ScenarioSpec)
    mc: McSpec = field(default_factory=McSpec)
    output_dir: str = "out"

    def as_dict(self) -> dict:
        return {
            **{k: getattr(self.model, k) for k in CALIBRATED},
            "utility": self.utility.as_dict(),
            "grid": dataclasses.asdict(self.grid),
            "scenarios": {
                "y_multipliers": list(self.scenarios.y_multipliers),
                "m": self.scenarios.m,
            },
            "mc": dataclasses.asdict(self.mc),
            "output_dir": self.output_dir,
        }

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{name} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in {name}: {sorted(unknown)}")
    if "y_multipliers" in raw:
        raw = {**raw, "y_multipliers": tuple(float(v) for v in raw["y_multipliers"])}
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigurationError(f"bad {name} section: {exc}") from exc


def from_mapping(raw: dict | None) -> RunConfig:
    raw = dict(raw or {})
    model_keys = {k: raw.pop(k) for k in list(raw) if k in CALIBRATED}
    utility_raw = raw.pop("utility", None) or {"variant": "power", "gamma": 3.0}
    grid = _section(GridSpec, raw.pop("grid", None), "grid")
    scenarios = _section(ScenarioSpec, raw.pop("scenarios", None), "scenarios")
    mc = _section(McSpec, raw.pop("mc", None), "mc")
    output_dir = raw.pop("output_dir", None) or os.environ.get(OUTPUT_ENV, "out")
    if raw:
        raise ConfigurationError(f"unknown configuration keys: {sorted(raw)}")
    try:
        utility = UtilitySpec(**utility_raw)
    except TypeError as exc:
        raise ConfigurationError(f"bad utility section: {exc}") from exc
    model = ModelParams(**{**CALIBRATED, **{k: float(v) for k, v in model_keys.items()}})
    return RunConfig(model, utility, grid, scenarios, mc, str(output_dir))


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return from_mapping({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigurationError("config file must hold a mapping")
    return from_mapping(raw)
