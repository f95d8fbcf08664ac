"""First-order stochastic-volatility correction ``Q1`` and the ``D_k`` operators.

With the reference level set to the current factor value (``ybar = y``,
``xbar = x``) the correction is::

    Q1 = tau * lam0 * A * D1 Q0 + tau**2 / 2 * lam0 * B * (D3 - 2 D1) Q0

where ``tau = T - t``, ``D_k = R**k d^k/dxi^k`` and ``A``, ``B`` come from the
Taylor coefficients of the Sharpe ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from drawdown_sv.errors import ConfigurationError, InternalConsistencyError
from drawdown_sv.market_model import ExpansionCoefficients, ModelParams
from drawdown_sv.risk_tolerance import RiskDerivatives
from drawdown_sv.surface import Surface, SurfaceKind, require_same_grid, xi_derivative

ROUTE_TOL = 1e-10
RATIO_GUARD = 1e-14
IDENTITY_WINDOW = (3, 2)  # first j index, first layer n


@dataclass(frozen=True)
class CorrectionInputs:
    q0: Surface
    rd: RiskDerivatives
    coeffs: ExpansionCoefficients
    params: ModelParams
    y_current: float
    horizon: float | None = None

    def __post_init__(self):
        require_same_grid(self.q0, self.rd.r)
        if not self.y_current > 0:
            raise ConfigurationError("y_current must be > 0")
        if self.horizon is not None and self.horizon != self.q0.grid.horizon:
            raise ConfigurationError("horizon disagrees with the grid horizon")
        if self.coeffs.ybar != self.y_current:
            raise ConfigurationError("coefficients must be expanded at ybar = y_current")


def apply_dk(q0: Surface, rd: RiskDerivatives, k: int) -> Surface:
    if k not in (1, 2, 3):
        raise ValueError(f"k must be 1, 2 or 3, got {k}")
    grid = require_same_grid(q0, rd.r)
    dq = xi_derivative(q0.values, grid.dxi, k)
    return q0.derived(rd.r.values**k * dq)


def ab_coefficients(
    coeffs: ExpansionCoefficients,
    t,
    horizon: float,
    rho: float,
    x: float | None = None,
    y: float | None = None,
):
    """``A(t, x, y)`` and ``B`` of the closed-form correction.

    ``x`` and ``y`` default to the expansion point, which removes the
    ``(x - xbar)`` and ``(y - ybar)`` terms. ``t`` may be an array.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > horizon * (1 + 1e-12)):
        raise ValueError("t must lie in [0, horizon]")
    dx = 0.0 if x is None else x - coeffs.xbar
    dy = 0.0 if y is None else y - coeffs.ybar
    tau = horizon - t
    a = coeffs.lambda10 * (dx + 0.5 * tau * coeffs.b0) + coeffs.lambda01 * (
        dy + 0.5 * tau * coeffs.c0
    )
    b = coeffs.lambda10 * coeffs.sigma0 * coeffs.lambda0 + (
        coeffs.lambda01 * rho * coeffs.beta0 * coeffs.lambda0
    )
    return (float(a) if a.ndim == 0 else a), b


def q1_terms(inp: CorrectionInputs) -> tuple[np.ndarray, np.ndarray]:
    """The ``A`` (drift of the factor) and ``B`` (correlation) parts of ``Q1``."""
    grid = inp.q0.grid
    tau = grid.time_to_maturity[:, None]
    a, b = ab_coefficients(inp.coeffs, grid.t_nodes, grid.horizon, inp.params.rho)
    lam0 = inp.coeffs.lambda0
    d1 = apply_dk(inp.q0, inp.rd, 1).values
    d3 = apply_dk(inp.q0, inp.rd, 3).values
    return tau * lam0 * a[:, None] * d1, 0.5 * tau**2 * lam0 * b * (d3 - 2.0 * d1)


def _q1_chacko(inp: CorrectionInputs) -> np.ndarray:
    p, y = inp.params, inp.y_current
    grid = inp.q0.grid
    tau = grid.time_to_maturity[:, None]
    r = inp.rd.r.values
    q_xi = xi_derivative(inp.q0.values, grid.dxi, 1)
    q_xixixi = xi_derivative(inp.q0.values, grid.dxi, 3)
    mr = p.excess_drift
    bracket = p.kappa * (p.theta - y) * r * q_xi + p.rho * p.delta * mr * y * (
        -2.0 * r * q_xi + r**3 * q_xixixi
    )
    return 0.25 * mr**2 * tau**2 * bracket


def compute_q1(inp: CorrectionInputs) -> Surface:
    """Correction surface at ``y_current``; both formula routes must agree."""
    a_term, b_term = q1_terms(inp)
    general = a_term + b_term
    chacko = _q1_chacko(inp)
    tol = ROUTE_TOL * inp.q0.scale()
    gap = float(np.max(np.abs(general - chacko)))
    if gap > tol:
        raise InternalConsistencyError(
            f"general and closed-form correction routes disagree by {gap:.3e}"
        )
    return inp.q0.derived(general, SurfaceKind.CORRECTION_Q1)


def relative_correction(q1: Surface, q0: Surface) -> np.ndarray:
    q = q0.values
    safe = np.where(np.abs(q) < RATIO_GUARD, np.copysign(RATIO_GUARD, q), q)
    return q1.values / safe


@dataclass(frozen=True)
class IdentityReport:
    gaps: dict[str, float]
    window: tuple[int, int]

    def max_gap(self) -> float:
        return max(self.gaps.values())

    def passed(self, tol: float) -> bool:
        return all(g <= tol for g in self.gaps.values())


def _normalized_gap(lhs, rhs, parts, j0, n0):
    """``max|lhs - rhs|`` over the window, relative to the largest term involved.

    ``parts`` are the summands of ``lhs``; normalizing by the term size keeps
    the measure meaningful where both sides cancel to zero.
    """
    sl = (slice(n0, None), slice(j0, lhs.shape[1] - j0))
    diff = np.abs(lhs - rhs)[sl]
    if diff.size == 0:
        return 0.0
    ref = max(np.abs(a[sl]).max() for a in (*parts, rhs))
    if ref == 0:
        return 0.0
    return float(diff.max() / ref)


def verify_rcalcs(q0: Surface, rd: RiskDerivatives) -> IdentityReport:
    """Both sides of the three ``D_k`` identities, compared on interior nodes.

    Gaps are ``max|lhs - rhs|`` relative to the largest term of the identity,
    over ``3 <= j <= J-3`` and layers ``n >= 2``.
    """
    grid = require_same_grid(q0, rd.r)
    dxi = grid.dxi
    r, r1, r2, r3 = rd.r.values, rd.r1.values, rd.r2.values, rd.r3.values

    def d(f, k):
        return r**k * xi_derivative(f, dxi, k)

    d1q, d3q = d(q0.values, 1), d(q0.values, 3)
    d1d1q, d2d1q = d(d1q, 1), d(d1q, 2)
    d1d1d1q, d2d1d1q = d(d1d1q, 1), d(d1d1q, 2)
    j0, n0 = IDENTITY_WINDOW
    gaps = {
        "i": _normalized_gap(d1d1q + d2d1q, r * r2 * d1q, (d1d1q, d2d1q), j0, n0),
        "ii": _normalized_gap(-2.0 * d1q + d3q, d1d1q, (2.0 * d1q, d3q), j0, n0),
        "iii": _normalized_gap(
            d1d1d1q + d2d1d1q,
            r * (r2 * (3.0 * r1 - 2.0) + r * r3) * d1q,
            (d1d1d1q, d2d1d1q),
            j0,
            n0,
        ),
    }
    return IdentityReport(gaps=gaps, window=IDENTITY_WINDOW)
