"""Zeroth- and first-order strategy surfaces and bilinear lookup."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from drawdown_sv.errors import ConfigurationError
from drawdown_sv.market_model import ExpansionCoefficients, ModelParams
from drawdown_sv.risk_tolerance import RiskDerivatives
from drawdown_sv.surface import Surface, SurfaceKind, require_same_grid, xi_derivative

log = logging.getLogger(__name__)

DEBUG_TOL = 0.05


class Order(enum.Enum):
    ZEROTH_ONLY = "zeroth"
    FIRST_ORDER = "first"


@dataclass(frozen=True)
class StrategyRequest:
    m: float = 1.0
    y: float = 27.9345
    order: Order = Order.FIRST_ORDER

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigurationError(f"m must be > 0, got {self.m}")
        if not self.y > 0:
            raise ConfigurationError(f"y must be > 0, got {self.y}")


def pi0(req: StrategyRequest, rd: RiskDerivatives, params: ModelParams) -> Surface:
    """``m * (mu - r) * y * R``: the constant-volatility position in the risky asset."""
    vals = req.m * params.excess_drift * req.y * rd.r.values
    return rd.r.derived(vals, SurfaceKind.STRATEGY, m=req.m)


def pi1(
    req: StrategyRequest,
    rd: RiskDerivatives,
    q0: Surface,
    coeffs: ExpansionCoefficients | None,
    params: ModelParams,
    debug: bool = False,
) -> Surface:
    """First-order strategy correction from ``R``, its xi-derivatives and ``Q0_xixi``.

    ``coeffs`` is accepted for interface symmetry; under the x-independent
    model every coefficient is a closed-form function of ``params`` and ``y``.
    With ``debug=True`` the same terms are also assembled from ``D_k``
    applied to ``Q0`` and any relative gap above 5% is logged.
    """
    grid = require_same_grid(q0, rd.r)
    if coeffs is not None and coeffs.ybar != req.y:
        raise ConfigurationError("coefficients must be expanded at ybar = y")
    r, r1, r2, r3 = rd.r.values, rd.r1.values, rd.r2.values, rd.r3.values
    q_xixi = xi_derivative(q0.values, grid.dxi, 2)
    vals = _assemble(
        req,
        params,
        grid.time_to_maturity[:, None],
        r**2 * q_xixi,
        r**2 * r2 * (3.0 * r1 - 2.0) + r**3 * r3,
        r * (r1 - 1.0),
    )
    if debug:
        alt = pi1_dk(req, rd, q0, params).values
        inner = (slice(2, None), slice(3, grid.j_count - 2))
        ref = np.abs(vals[inner]).max()
        gap = np.abs(vals - alt)[inner].max() / ref if ref > 0 else 0.0
        if gap > DEBUG_TOL:
            log.warning("pi1 assemblies differ: relative gap %.3g > %.2g", gap, DEBUG_TOL)
        else:
            log.debug("pi1 assemblies agree: relative gap %.3g", gap)
    return rd.r.derived(vals, SurfaceKind.STRATEGY, m=req.m)


def _assemble(req, params, tau, kappa_term, rho_term, linear_term):
    mr, y = params.excess_drift, req.y
    rd_ = params.rho * params.delta
    quad = 0.5 * mr**3 * y**2 * tau**2 * (
        params.kappa * (params.theta - y) * kappa_term + rd_ * rho_term
    )
    return req.m * (quad + mr**2 * tau * rd_ * y * linear_term)


def _safe_div(num, den, floor):
    small = np.abs(den) <= floor
    return np.where(small, 0.0, num / np.where(small, 1.0, den))


def pi1_dk(
    req: StrategyRequest, rd: RiskDerivatives, q0: Surface, params: ModelParams
) -> Surface:
    """``pi1`` with the R-derivative groups rebuilt from ``D_k Q0``.

    Uses ``R**2 Q_xixi = D2 Q``, ``R (R_xi - 1) = D1 D1 Q / Q_xi`` and
    ``R**2 (R_xixi (3 R_xi - 2) + R R_xixixi) = R (D1 + D2) D1 D1 Q / D1 Q``.
    """
    grid = require_same_grid(q0, rd.r)
    dxi = grid.dxi
    r = rd.r.values

    def d(f, k):
        return r**k * xi_derivative(f, dxi, k)

    q = q0.values
    q_xi = xi_derivative(q, dxi, 1)
    d1q = d(q, 1)
    d1d1q = d(d1q, 1)
    floor = 1e-14 * max(np.abs(q_xi).max(), 1.0)
    vals = _assemble(
        req,
        params,
        grid.time_to_maturity[:, None],
        d(q, 2),
        r * _safe_div(d(d1d1q, 1) + d(d1d1q, 2), d1q, floor),
        _safe_div(d1d1q, q_xi, floor),
    )
    return rd.r.derived(vals, SurfaceKind.STRATEGY, m=req.m)


def pi1_from_expansion(
    req: StrategyRequest,
    rd: RiskDerivatives,
    coeffs: ExpansionCoefficients,
    params: ModelParams,
) -> Surface:
    """First-order strategy term evaluated from the general expansion.

    Uses ``A``, ``B`` and the Taylor coefficients directly. Relative to
    :func:`pi1` its kappa term carries ``R**2 R_xixi`` in place of
    ``R**2 Q0_xixi`` and the other terms differ by constant factors, so the
    two are not interchangeable; :func:`pi1` drives every exported strategy.
    """
    from drawdown_sv.correction import ab_coefficients

    grid = rd.grid
    tau = grid.time_to_maturity[:, None]
    a, b = ab_coefficients(coeffs, grid.t_nodes, grid.horizon, params.rho)
    r, r1, r2, r3 = rd.r.values, rd.r1.values, rd.r2.values, rd.r3.values
    lam0 = coeffs.lambda0
    sharpe_over_sigma = params.excess_drift / coeffs.sigma0**2
    vals = sharpe_over_sigma * (
        tau * lam0 * a[:, None] * r**2 * r2
        + 0.5 * tau**2 * lam0 * b * r**2 * (r2 * (3.0 * r1 - 2.0) + r * r3)
    ) + tau * lam0 * (
        coeffs.lambda01 * params.rho * coeffs.beta0 / coeffs.sigma0 + coeffs.lambda10
    ) * r * (r1 - 1.0)
    return rd.r.derived(req.m * vals, SurfaceKind.STRATEGY, m=req.m)


def _snap(s, tol=1e-9):
    r = np.round(s)
    return np.where(np.abs(s - r) < tol, r, s)


def strategy_lookup(surface: Surface, t, xi):
    """Bilinear interpolation in ``(t, xi)``; ``xi`` is clamped to ``[alpha, 1]``.

    Accepts scalars or broadcastable arrays. Values at mesh nodes are returned
    exactly.
    """
    grid = surface.grid
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > grid.horizon):
        raise ValueError(f"t must lie in [0, {grid.horizon}]")
    xi_arr = np.clip(np.asarray(xi, dtype=float), grid.alpha, 1.0)
    t_arr, xi_arr = np.broadcast_arrays(t_arr, xi_arr)

    s = _snap((grid.horizon - t_arr) / grid.dt)
    n = np.clip(np.floor(s).astype(np.int64), 0, grid.n_count - 1)
    ws = np.clip(s - n, 0.0, 1.0)
    u = _snap((xi_arr - grid.alpha) / grid.dxi)
    j = np.clip(np.floor(u).astype(np.int64), 0, grid.j_count - 1)
    wu = np.clip(u - j, 0.0, 1.0)

    v = surface.values
    top = v[n, j] * (1.0 - wu) + v[n, j + 1] * wu
    bot = v[n + 1, j] * (1.0 - wu) + v[n + 1, j + 1] * wu
    out = top * (1.0 - ws) + bot * ws
    return float(out) if out.ndim == 0 else out
