"""Orchestration shared by the CLI and the check suite."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from drawdown_sv.config import RunConfig
from drawdown_sv.correction import CorrectionInputs, compute_q1, relative_correction
from drawdown_sv.market_model import (
    ExpansionCoefficients,
    ModelParams,
    UtilitySpec,
    expansion_coefficients,
)
from drawdown_sv.mc_validator import McConfig, McResult, simulate
from drawdown_sv.mesh import Grid, build_grid
from drawdown_sv.risk_tolerance import RiskDerivatives, differentiate, solve_r
from drawdown_sv.strategy import StrategyRequest, pi0, pi1
from drawdown_sv.surface import Surface, SurfaceKind
from drawdown_sv.value_zeroth import solve_q0


@dataclass(frozen=True)
class ZerothSolution:
    y: float
    coeffs: ExpansionCoefficients
    grid: Grid
    q0: Surface
    r: Surface
    rd: RiskDerivatives


@lru_cache(maxsize=6)
def _solve_cached(params, utility, alpha, horizon, j_count, safety, y):
    grid = build_grid(alpha, horizon, j_count, params, utility, safety, ybar=y)
    coeffs = expansion_coefficients(params, 0.0, y)
    q0 = solve_q0(grid, utility, coeffs.lambda0)
    r = solve_r(grid, utility, coeffs.lambda0)
    return ZerothSolution(y, coeffs, grid, q0, r, differentiate(r))


def solve_zeroth(
    params: ModelParams,
    utility: UtilitySpec,
    alpha: float,
    horizon: float,
    j_count: int,
    safety: float,
    y: float,
) -> ZerothSolution:
    """Q0 and R at Sharpe ratio ``lambda(y)`` (reference level set to ``y``)."""
    return _solve_cached(params, utility, alpha, horizon, j_count, safety, float(y))


def solve_for(cfg: RunConfig, y: float | None = None, j_count: int | None = None):
    g = cfg.grid
    y = cfg.model.theta if y is None else y
    return solve_zeroth(
        cfg.model, cfg.utility, g.alpha, g.horizon, j_count or g.j_count, g.safety, y
    )


def scenario_levels(cfg: RunConfig) -> list[tuple[float, float]]:
    return [(mult, mult * cfg.model.theta) for mult in cfg.scenarios.y_multipliers]


def tag(mult: float) -> str:
    return f"{mult:g}".replace(".", "p").replace("-", "m")


def correction_for(cfg: RunConfig, y: float) -> tuple[ZerothSolution, Surface, np.ndarray]:
    sol = solve_for(cfg, y)
    q1 = compute_q1(CorrectionInputs(sol.q0, sol.rd, sol.coeffs, cfg.model, y))
    return sol, q1, relative_correction(q1, sol.q0)


def strategies_for(cfg: RunConfig, y: float, m: float | None = None):
    sol = solve_for(cfg, y)
    req = StrategyRequest(m=cfg.scenarios.m if m is None else m, y=y)
    p0 = pi0(req, sol.rd, cfg.model)
    p1 = pi1(req, sol.rd, sol.q0, sol.coeffs, cfg.model)
    return sol, p0, p1


def run_mc(cfg: RunConfig, strategy: str | None = None, keep_paths=False) -> tuple[McResult, float]:
    """Rollout from the configured start; returns the result and the PDE reference."""
    mc = cfg.mc
    y = mc.y_multiplier * cfg.model.theta
    params = cfg.model.with_overrides(delta=0.0) if mc.freeze_volatility else cfg.model
    sol, p0, p1 = strategies_for(cfg, y, m=1.0)
    order = strategy or mc.order
    if order == "zero":
        surf = p0.derived(np.zeros(sol.grid.shape), SurfaceKind.STRATEGY, m=1.0)
    elif order == "first":
        surf = p0.derived(p0.values + p1.values, SurfaceKind.STRATEGY, m=1.0)
    else:
        surf = p0
    mcfg = McConfig(
        strategy=surf,
        paths=mc.paths,
        steps=mc.steps,
        seed=mc.seed,
        initial_xi=mc.initial_xi,
        initial_m=mc.initial_m,
        initial_y=y,
        freeze_volatility=mc.freeze_volatility,
        antithetic=mc.antithetic,
        keep_paths=keep_paths,
    )
    res = simulate(mcfg, params, cfg.utility)
    ref = float(np.interp(mc.initial_xi, sol.grid.xi_nodes, sol.q0.at_time_zero()))
    return res, ref
