"""Monte Carlo rollout of the discounted wealth, running maximum and factor.

Each path draws from its own Philox stream keyed by ``(seed, path_index)``,
so results do not depend on chunking or on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from drawdown_sv.errors import ConfigurationError, SimulationError
from drawdown_sv.market_model import ModelParams, UtilitySpec, utility_value
from drawdown_sv.strategy import strategy_lookup
from drawdown_sv.surface import Surface

CHUNK = 4096
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    strategy: Surface
    paths: int = 100_000
    steps: int = 500
    seed: int = 0
    initial_xi: float = 0.75
    initial_m: float = 1.0
    initial_y: float = 27.9345
    freeze_volatility: bool = False
    antithetic: bool = False
    keep_paths: bool = False

    def __post_init__(self):
        alpha = self.strategy.grid.alpha
        if self.paths < 1 or self.steps < 1:
            raise ConfigurationError("paths and steps must be >= 1")
        if not alpha < self.initial_xi <= 1.0:
            raise ConfigurationError(f"initial_xi must lie in ({alpha}, 1]")
        if not self.initial_m > 0 or not self.initial_y > 0:
            raise ConfigurationError("initial_m and initial_y must be > 0")
        if self.antithetic and self.paths % 2:
            raise ConfigurationError("antithetic sampling needs an even path count")

    def describe(self) -> dict:
        return {
            "paths": self.paths,
            "steps": self.steps,
            "seed": self.seed,
            "initial_xi": self.initial_xi,
            "initial_m": self.initial_m,
            "initial_y": self.initial_y,
            "freeze_volatility": self.freeze_volatility,
            "antithetic": self.antithetic,
        }


@dataclass(frozen=True)
class McResult:
    mean_utility: float
    std_error: float
    violation_count: int
    absorbed_fraction: float
    paths: int
    steps: int
    terminal_ratio: np.ndarray | None = field(default=None, repr=False)
    absorbed: np.ndarray | None = field(default=None, repr=False)
    utilities: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "mean_utility": self.mean_utility,
            "std_error": self.std_error,
            "violation_count": self.violation_count,
            "absorbed_fraction": self.absorbed_fraction,
            "paths": self.paths,
            "steps": self.steps,
        }


def _path_normals(seed: int, index: int, steps: int) -> np.ndarray:
    key = np.array([index & _MASK64, seed & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((steps, 2))


def _chunk_normals(cfg: McConfig, start: int, stop: int) -> np.ndarray:
    z = np.empty((stop - start, cfg.steps, 2))
    for i, p in enumerate(range(start, stop)):
        if cfg.antithetic:
            z[i] = _path_normals(cfg.seed, p // 2, cfg.steps)
            if p % 2:
                z[i] *= -1.0
        else:
            z[i] = _path_normals(cfg.seed, p, cfg.steps)
    return z


def _run_chunk(cfg: McConfig, params: ModelParams, start: int, stop: int):
    grid = cfg.strategy.grid
    alpha, horizon = grid.alpha, grid.horizon
    h = horizon / cfg.steps
    sqh = math.sqrt(h)
    z = _chunk_normals(cfg, start, stop)
    size = stop - start

    lvl = np.full(size, cfg.initial_xi * cfg.initial_m)
    mx = np.full(size, cfg.initial_m)
    y = np.full(size, cfg.initial_y)
    alive = np.ones(size, dtype=bool)
    violations = np.zeros(size, dtype=bool)
    frozen = cfg.freeze_volatility
    delta = 0.0 if frozen else params.delta
    rho_c = math.sqrt(max(0.0, 1.0 - params.rho**2))
    per_unit_m = 1.0 / cfg.strategy.m

    for k in range(cfg.steps):
        t = min(k * h, horizon)
        ypos = np.maximum(y, 0.0)
        if np.any(ypos <= 0.0):
            p = start + int(np.argmax(ypos <= 0.0))
            raise SimulationError(f"volatility factor hit zero on path {p} at step {k}")
        ratio = np.clip(lvl / mx, alpha, 1.0)
        pos = strategy_lookup(cfg.strategy, t, ratio) * mx * per_unit_m
        pos[~alive] = 0.0
        dw1 = sqh * z[:, k, 0]
        dw2 = sqh * z[:, k, 1]
        sigma = 1.0 / np.sqrt(ypos)
        lvl = lvl + pos * (params.excess_drift * h + sigma * dw1)
        if not frozen:
            y = y + params.kappa * (params.theta - ypos) * h + delta * np.sqrt(ypos) * (
                params.rho * dw1 + rho_c * dw2
            )
        if not np.all(np.isfinite(lvl)):
            p = start + int(np.argmax(~np.isfinite(lvl)))
            raise SimulationError(f"non-finite wealth on path {p} at step {k}")
        mx = np.maximum(mx, lvl)
        hit = alive & (lvl <= alpha * mx)
        lvl[hit] = alpha * mx[hit]
        alive &= ~hit
        violations |= lvl < alpha * mx * (1.0 - 1e-14)

    terminal = np.where(alive, lvl / mx, alpha)
    return terminal, ~alive, violations


def simulate(
    cfg: McConfig, params: ModelParams, utility: UtilitySpec, workers: int = 1
) -> McResult:
    """Estimate ``E[U(L_T / M_T)]`` under ``cfg.strategy``.

    Once wealth touches ``alpha * M`` the path stops trading and its terminal
    ratio is ``alpha``. The strategy surface gives the position per unit of
    running maximum at the level ``strategy.m``; positions scale with ``M_t``.
    """
    bounds = [(s, min(s + CHUNK, cfg.paths)) for s in range(0, cfg.paths, CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_chunk(cfg, params, *b), bounds))
    else:
        parts = [_run_chunk(cfg, params, *b) for b in bounds]
    terminal = np.concatenate([p[0] for p in parts])
    absorbed = np.concatenate([p[1] for p in parts])
    violations = np.concatenate([p[2] for p in parts])

    u = np.asarray(utility_value(utility, terminal), dtype=float).reshape(-1)
    samples = 0.5 * (u[0::2] + u[1::2]) if cfg.antithetic else u
    if np.all(samples == samples[0]):
        mean, se = float(samples[0]), 0.0
    else:
        mean = float(np.sum(samples) / samples.size)
        se = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
    return McResult(
        mean_utility=mean,
        std_error=se,
        violation_count=int(violations.sum()),
        absorbed_fraction=float(absorbed.mean()),
        paths=cfg.paths,
        steps=cfg.steps,
        terminal_ratio=terminal if cfg.keep_paths else None,
        absorbed=absorbed if cfg.keep_paths else None,
        utilities=u if cfg.keep_paths else None,
    )


def compare(result: McResult, reference_value: float) -> float:
    """z-score of the Monte Carlo mean against a reference value.

    A zero standard error gives 0 on an exact match and +inf otherwise.
    """
    diff = result.mean_utility - reference_value
    if result.std_error == 0:
        return 0.0 if diff == 0 else math.inf
    return diff / result.std_error
