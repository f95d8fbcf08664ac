"""Explicit backward march for the risk tolerance ``R = -Q0_xi / Q0_xixi``.

``R`` solves the fast-diffusion equation ``R_t + (lam0**2/2) R**2 R_xixi = 0``
with ``R = 0`` at both ends for ``t < T`` and ``-U'/U''`` at maturity. The
terminal layer keeps the analytic value at ``xi = 1``; the zero boundary is
imposed from the first computed layer on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from drawdown_sv.errors import SolverError
from drawdown_sv.market_model import UtilitySpec, terminal_risk_tolerance
from drawdown_sv.mesh import MIN_J, Grid
from drawdown_sv.surface import Surface, SurfaceKind, require_same_grid, xi_derivative
from drawdown_sv.value_zeroth import DENOMINATOR_FLOOR, _check_lambda

log = logging.getLogger(__name__)

NEGATIVITY_TOL = 1e-12
GROWTH_ABORT = 2.0
MAX_PRINCIPLE_TOL = 1e-9


@dataclass(frozen=True)
class RiskDerivatives:
    r: Surface
    r1: Surface
    r2: Surface
    r3: Surface

    @property
    def grid(self) -> Grid:
        return self.r.grid


def solve_r(grid: Grid, utility: UtilitySpec, lambda0: float) -> Surface:
    _check_lambda(grid, lambda0)
    terminal = np.asarray(terminal_risk_tolerance(utility, grid.xi_nodes), dtype=float)
    r_max = float(terminal.max())
    coef = 0.5 * lambda0**2 * grid.dt / grid.dxi**2

    r = np.empty(grid.shape)
    r[0] = terminal
    grew_at = []
    for n in range(grid.n_count):
        prev = r[n]
        nxt = r[n + 1]
        inner = prev[1:-1]
        nxt[1:-1] = inner + coef * inner**2 * (prev[2:] - 2.0 * inner + prev[:-2])
        nxt[0] = 0.0
        nxt[-1] = 0.0
        lo = nxt.min()
        if lo < -NEGATIVITY_TOL or not np.all(np.isfinite(nxt)):
            j = int(np.argmin(nxt))
            raise SolverError(f"R lost positivity at step n={n + 1}, j={j}: {lo:.3e}")
        hi = nxt.max()
        if hi > GROWTH_ABORT * r_max:
            raise SolverError(
                f"R exceeded {GROWTH_ABORT} x terminal max at step n={n + 1}: {hi:.6g}"
            )
        if hi > prev.max() + MAX_PRINCIPLE_TOL * r_max:
            grew_at.append(n + 1)
    if grew_at:
        log.warning(
            "max of R increased on %d steps (first at n=%d)", len(grew_at), grew_at[0]
        )
    return Surface(grid, r, SurfaceKind.RISK_TOLERANCE)


def risk_tolerance_from_q0(q0: Surface) -> np.ndarray:
    """``-D Q / D2 Q`` from central differences of the value surface (interior only)."""
    v = q0.values
    dxi = q0.grid.dxi
    out = np.full(v.shape, np.nan)
    d1 = (v[:, 2:] - v[:, :-2]) / (2.0 * dxi)
    d2 = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / dxi**2
    floor = DENOMINATOR_FLOOR * q0.scale() / dxi**2
    small = np.abs(d2) < floor
    out[:, 1:-1] = np.where(small, 0.0, -d1 / np.where(small, 1.0, d2))
    return out


def consistency_vs_q0(r: Surface, q0: Surface) -> float:
    """Max relative gap between the R march and R recovered from Q0.

    Evaluated on ``3 <= j <= J-3`` and layers ``n >= 2``.
    """
    grid = require_same_grid(r, q0)
    from_q = risk_tolerance_from_q0(q0)
    eps = DENOMINATOR_FLOOR * q0.scale()
    js = slice(3, grid.j_count - 2)
    rv = r.values[2:, js]
    gap = np.abs(rv - from_q[2:, js]) / (rv + eps)
    return float(gap.max()) if gap.size else 0.0


def differentiate(r: Surface) -> RiskDerivatives:
    if r.grid.j_count < MIN_J:
        raise ValueError(f"need j_count >= {MIN_J} for the third-derivative stencil")
    dxi = r.grid.dxi
    return RiskDerivatives(
        r=r,
        r1=r.derived(xi_derivative(r.values, dxi, 1)),
        r2=r.derived(xi_derivative(r.values, dxi, 2)),
        r3=r.derived(xi_derivative(r.values, dxi, 3)),
    )
