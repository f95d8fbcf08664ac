"""Explicit backward march for the zeroth-order value ``Q0(t, xi)``.

Interior update, with ``n`` counting steps back from maturity::

    Q[n+1, j] = Q[n, j] - lam0**2 * dt / 8 * (Q[n, j+1] - Q[n, j-1])**2
                                          / (Q[n, j+1] - 2 Q[n, j] + Q[n, j-1])

followed by ``Q[n+1, 0] = U(alpha)`` and the copy rule ``Q[n+1, J] = Q[n+1, J-1]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from drawdown_sv.errors import ConfigurationError, SolverError
from drawdown_sv.market_model import UtilitySpec, utility_value
from drawdown_sv.mesh import Grid
from drawdown_sv.surface import (
    Surface,
    SurfaceKind,
    central_time_derivative,
    require_same_grid,
    xi_derivative,
)

log = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-12
SHAPE_TOL = 1e-9


def _check_lambda(grid: Grid, lambda0: float):
    if abs(lambda0) > grid.lambda0 * (1 + 1e-12) and not grid.dt_capped:
        raise ConfigurationError(
            f"grid was sized for lambda0={grid.lambda0}, cannot march with {lambda0}"
        )
    if grid.dt_capped and lambda0 != 0:
        raise ConfigurationError("grid has a capped time step; only lambda0=0 is stable")


def solve_q0(grid: Grid, utility: UtilitySpec, lambda0: float) -> Surface:
    _check_lambda(grid, lambda0)
    terminal = utility_value(utility, grid.xi_nodes)
    scale = float(np.max(np.abs(terminal)))
    floor = DENOMINATOR_FLOOR * scale
    coef = lambda0**2 * grid.dt / 8.0

    q = np.empty(grid.shape)
    q[0] = terminal
    u_alpha = terminal[0]
    for n in range(grid.n_count):
        prev = q[n]
        num = (prev[2:] - prev[:-2]) ** 2
        den = prev[2:] - 2.0 * prev[1:-1] + prev[:-2]
        small = np.abs(den) < floor
        step = np.where(small, 0.0, num / np.where(small, 1.0, den))
        nxt = q[n + 1]
        nxt[1:-1] = prev[1:-1] - coef * step
        nxt[0] = u_alpha
        nxt[-1] = nxt[-2]
        if not np.all(np.isfinite(nxt)):
            raise SolverError(f"non-finite Q0 at step n={n + 1}")
    return Surface(grid, q, SurfaceKind.VALUE_Q0)


def transformed_residual(q0: Surface, r: Surface, lambda0: float) -> float:
    """Max |Q_t - (lam0**2/2) R**2 Q_xixi| over interior nodes.

    Nodes within two of either xi-boundary and the terminal layer are skipped;
    time and space derivatives are central differences.
    """
    grid = require_same_grid(q0, r)
    qt = central_time_derivative(q0.values, grid.dt)  # layers 1..N-1
    qxx = xi_derivative(q0.values[1:-1], grid.dxi, 2)
    pde = 0.5 * lambda0**2 * r.values[1:-1] ** 2 * qxx
    j = slice(3, grid.j_count - 2)
    gap = np.abs(qt[:, j] - pde[:, j])
    return float(gap.max()) if gap.size else 0.0


@dataclass(frozen=True)
class ShapeReport:
    passed: bool
    tolerance: float
    worst_monotonicity: float
    worst_monotonicity_at: tuple[int, int]
    worst_concavity: float
    worst_concavity_at: tuple[int, int]

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (
            f"shape {status}: min forward diff {self.worst_monotonicity:.3e} at "
            f"{self.worst_monotonicity_at}, max second diff {self.worst_concavity:.3e} "
            f"at {self.worst_concavity_at} (tol {self.tolerance:.1e})"
        )


def check_shape(q0: Surface, rel_tol: float = SHAPE_TOL) -> ShapeReport:
    """Discrete monotonicity and concavity in xi on every time slice.

    Locations are reported as ``(n, j)``; for the concavity check ``j`` is the
    center node of the second difference.
    """
    v = q0.values
    tol = rel_tol * q0.scale()
    fwd = np.diff(v, axis=1)
    sec = v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]
    im = np.unravel_index(np.argmin(fwd), fwd.shape)
    ic = np.unravel_index(np.argmax(sec), sec.shape)
    worst_m = float(fwd[im])
    worst_c = float(sec[ic])
    return ShapeReport(
        passed=worst_m >= -tol and worst_c <= tol,
        tolerance=tol,
        worst_monotonicity=worst_m,
        worst_monotonicity_at=(int(im[0]), int(im[1])),
        worst_concavity=worst_c,
        worst_concavity_at=(int(ic[0]), int(ic[1]) + 1),
    )
