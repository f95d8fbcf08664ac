"""Coefficient-expansion approximation for drawdown-constrained portfolio
choice under local stochastic volatility."""

from drawdown_sv.market_model import (
    ExpansionCoefficients,
    ModelParams,
    UtilitySpec,
    expansion_coefficients,
    sharpe_ratio,
    terminal_risk_tolerance,
    utility_value,
)
from drawdown_sv.mesh import Grid, build_grid, stable_dt
from drawdown_sv.surface import Surface, SurfaceKind
from drawdown_sv.value_zeroth import check_shape, solve_q0, transformed_residual
from drawdown_sv.risk_tolerance import (
    RiskDerivatives,
    consistency_vs_q0,
    differentiate,
    solve_r,
)
from drawdown_sv.correction import (
    CorrectionInputs,
    ab_coefficients,
    apply_dk,
    compute_q1,
    verify_rcalcs,
)
from drawdown_sv.strategy import StrategyRequest, pi0, pi1, strategy_lookup
from drawdown_sv.mc_validator import McConfig, McResult, compare, simulate

__version__ = "0.1.0"

__all__ = [
    "CorrectionInputs",
    "ExpansionCoefficients",
    "Grid",
    "McConfig",
    "McResult",
    "ModelParams",
    "RiskDerivatives",
    "StrategyRequest",
    "Surface",
    "SurfaceKind",
    "UtilitySpec",
    "ab_coefficients",
    "apply_dk",
    "build_grid",
    "check_shape",
    "compare",
    "compute_q1",
    "consistency_vs_q0",
    "differentiate",
    "expansion_coefficients",
    "pi0",
    "pi1",
    "sharpe_ratio",
    "simulate",
    "solve_q0",
    "solve_r",
    "stable_dt",
    "strategy_lookup",
    "terminal_risk_tolerance",
    "transformed_residual",
    "utility_value",
    "verify_rcalcs",
]
