"""The (time x xi) nodal array shared by all solvers, plus xi-derivative stencils."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from drawdown_sv.errors import GridMismatchError, SolverError
from drawdown_sv.mesh import Grid


class SurfaceKind(enum.Enum):
    VALUE_Q0 = "q0"
    RISK_TOLERANCE = "r"
    CORRECTION_Q1 = "q1"
    STRATEGY = "strategy"
    DERIVED = "derived"


@dataclass(frozen=True)
class Surface:
    """Nodal values ``values[n, j]`` at ``(T - n*dt, xi_j)``.

    ``m`` is the running-maximum level a strategy surface was computed for;
    other kinds ignore it.
    """

    grid: Grid
    values: np.ndarray
    kind: SurfaceKind
    m: float = 1.0

    def __post_init__(self):
        if np.shape(self.values) != self.grid.shape:
            raise GridMismatchError(
                f"values shape {np.shape(self.values)} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise SolverError(f"{self.kind.value} surface contains non-finite values")
        v = np.array(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def derived(self, values: np.ndarray, kind: SurfaceKind = SurfaceKind.DERIVED, m=None):
        return Surface(self.grid, np.asarray(values, dtype=float), kind, self.m if m is None else m)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.xi_nodes

    @property
    def t(self) -> np.ndarray:
        return self.grid.t_nodes

    def at_time_zero(self) -> np.ndarray:
        return self.values[-1]

    def scale(self) -> float:
        """Largest magnitude on the terminal slice (tolerance unit)."""
        return float(np.max(np.abs(self.values[0])))


def require_same_grid(*surfaces: Surface) -> Grid:
    g = surfaces[0].grid
    for s in surfaces[1:]:
        if not g.same_as(s.grid):
            raise GridMismatchError("surfaces live on different grids")
    return g


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Weights ``w`` with ``f^(order)(x) ~ sum(w_i f(x + o_i h)) / h**order``."""
    o = np.asarray(offsets, dtype=float)
    k = len(o)
    vander = np.vander(o, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(vander, rhs)


# Centered stencils are second order; the boundary stencils are chosen
# one-sided with one extra point so the accuracy stays second order.
_CENTERED = {1: (-1, 0, 1), 2: (-1, 0, 1), 3: (-2, -1, 0, 1, 2)}
_WIDTH = {1: 3, 2: 4, 3: 5}


def xi_derivative(values: np.ndarray, dxi: float, order: int) -> np.ndarray:
    """Derivative of ``order`` (1, 2 or 3) along the last axis.

    Central differences wherever the centered stencil fits, one-sided
    second-order stencils at and near the boundaries.
    """
    if order not in _CENTERED:
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    values = np.asarray(values, dtype=float)
    npts = values.shape[-1]
    width = _WIDTH[order]
    if npts < width + 1:
        raise ValueError("too few nodes for the requested derivative")
    out = np.empty_like(values)
    centered = _CENTERED[order]
    half = max(abs(c) for c in centered)
    w = fd_weights(centered, order)
    inner = slice(half, npts - half)
    acc = np.zeros(values[..., inner].shape)
    for wi, oi in zip(w, centered):
        acc += wi * values[..., half + oi : npts - half + oi]
    out[..., inner] = acc
    for j in list(range(half)) + list(range(npts - half, npts)):
        if j < half:
            offs = tuple(range(-j, -j + width))
        else:
            offs = tuple(range(npts - 1 - j - width + 1, npts - j))
        wj = fd_weights(offs, order)
        out[..., j] = sum(wi * values[..., j + oi] for wi, oi in zip(wj, offs))
    return out / dxi**order


def central_time_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """``dQ/dt`` in calendar time at layers ``1..N-1`` (``n`` counts backward)."""
    return -(values[2:] - values[:-2]) / (2.0 * dt)
