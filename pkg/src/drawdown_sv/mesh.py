"""Uniform (t, xi) mesh for the explicit schemes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from drawdown_sv.errors import ConfigurationError, StabilityWarning
from drawdown_sv.market_model import (
    ModelParams,
    UtilitySpec,
    sharpe_ratio,
    terminal_risk_tolerance,
)

DEFAULT_ALPHA = 0.5
DEFAULT_HORIZON = 1.0
DEFAULT_J = 200
DEFAULT_SAFETY = 0.5
MIN_J = 8


def stable_dt(
    lambda0: float,
    r_max: float,
    dxi: float,
    safety: float = DEFAULT_SAFETY,
    *,
    horizon: float = DEFAULT_HORIZON,
) -> float:
    """Largest explicit time step for effective diffusion ``(lambda0**2/2) R**2``.

    Returns ``safety * dxi**2 / (lambda0**2 * r_max**2)``. When there is no
    diffusion (``lambda0 == 0`` or ``r_max == 0``) the step is capped at
    ``horizon / 16`` and a :class:`StabilityWarning` is issued.
    """
    if not dxi > 0:
        raise ConfigurationError(f"dxi must be > 0, got {dxi}")
    if not 0 < safety <= 1:
        raise ConfigurationError(f"safety must lie in (0, 1], got {safety}")
    if lambda0 < 0 or r_max < 0:
        raise ConfigurationError("lambda0 and r_max must be non-negative")
    cap = horizon / 16.0
    if lambda0 == 0 or r_max == 0:
        warnings.warn(
            "no diffusion in the explicit scheme; time step capped at T/16",
            StabilityWarning,
            stacklevel=2,
        )
        return cap
    return safety * dxi**2 / (lambda0**2 * r_max**2)


@dataclass(frozen=True)
class Grid:
    alpha: float
    horizon: float
    j_count: int
    n_count: int
    dt: float
    lambda0: float
    r_max: float
    safety: float = DEFAULT_SAFETY
    dt_capped: bool = False
    xi_nodes: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def dxi(self) -> float:
        return (1.0 - self.alpha) / self.j_count

    @property
    def t_nodes(self) -> np.ndarray:
        """Calendar times ``t^n = T - n*dt``; index ``n`` counts back from maturity."""
        t = self.horizon - self.dt * np.arange(self.n_count + 1)
        t[-1] = 0.0
        return t

    @property
    def time_to_maturity(self) -> np.ndarray:
        return self.dt * np.arange(self.n_count + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_count + 1, self.j_count + 1)

    def same_as(self, other: "Grid") -> bool:
        return (
            self.alpha == other.alpha
            and self.horizon == other.horizon
            and self.j_count == other.j_count
            and self.n_count == other.n_count
            and self.dt == other.dt
        )

    def describe(self) -> dict:
        return {
            "alpha": self.alpha,
            "horizon": self.horizon,
            "j_count": self.j_count,
            "n_count": self.n_count,
            "dxi": self.dxi,
            "dt": self.dt,
            "lambda0": self.lambda0,
            "r_max": self.r_max,
            "safety": self.safety,
        }


def xi_nodes(alpha: float, j_count: int) -> np.ndarray:
    nodes = alpha + (1.0 - alpha) * np.arange(j_count + 1) / j_count
    nodes[-1] = 1.0
    nodes.flags.writeable = False
    return nodes


def build_grid(
    alpha: float = DEFAULT_ALPHA,
    horizon: float = DEFAULT_HORIZON,
    j_count: int = DEFAULT_J,
    params: ModelParams | None = None,
    utility: UtilitySpec | None = None,
    safety: float = DEFAULT_SAFETY,
    *,
    ybar: float | None = None,
) -> Grid:
    """Build the mesh for solves at Sharpe ratio ``lambda(ybar)``.

    ``ybar`` defaults to the long-run level ``theta``.
    """
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    if not horizon > 0:
        raise ConfigurationError(f"horizon must be > 0, got {horizon}")
    if int(j_count) != j_count or j_count < MIN_J:
        raise ConfigurationError(f"j_count must be an integer >= {MIN_J}, got {j_count}")
    j_count = int(j_count)
    params = params or ModelParams.calibrated()
    utility = utility or UtilitySpec.power(3.0)
    ybar = params.theta if ybar is None else ybar

    nodes = xi_nodes(alpha, j_count)
    lam0 = abs(sharpe_ratio(params, ybar))
    r_max = float(np.max(terminal_risk_tolerance(utility, nodes)))
    dxi = (1.0 - alpha) / j_count
    capped = lam0 == 0 or r_max == 0
    bound = stable_dt(lam0, r_max, dxi, safety, horizon=horizon)
    n_count = math.ceil(horizon / bound)
    dt = horizon / n_count
    assert dt <= bound
    return Grid(
        alpha=alpha,
        horizon=horizon,
        j_count=j_count,
        n_count=n_count,
        dt=dt,
        lambda0=lam0,
        r_max=r_max,
        safety=safety,
        dt_capped=capped,
        xi_nodes=nodes,
    )
