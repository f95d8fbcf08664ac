"""Market parameters, utility families and Taylor coefficients of the model
functions at a reference point.

The volatility factor ``Y`` is a precision: ``sigma(y) = 1/sqrt(y)``, the
drift of ``Y`` is ``kappa*(theta - y)`` and its volatility ``delta*sqrt(y)``.
All coefficients are independent of the log-price ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from drawdown_sv.errors import ConfigurationError, DomainError

# Calibrated parameter set; the default for every run.
CALIBRATED = {
    "excess_drift": 0.0811,
    "kappa": 0.3374,
    "theta": 27.9345,
    "delta": 0.6503,
    "rho": 0.5241,
}


@dataclass(frozen=True)
class ModelParams:
    excess_drift: float
    kappa: float
    theta: float
    delta: float
    rho: float

    def __post_init__(self):
        if not math.isfinite(self.excess_drift):
            raise ConfigurationError("excess_drift must be finite")
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be > 0, got {self.kappa}")
        if not self.theta > 0:
            raise ConfigurationError(f"theta must be > 0, got {self.theta}")
        if not self.delta >= 0:
            raise ConfigurationError(f"delta must be >= 0, got {self.delta}")
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"rho must lie in [-1, 1], got {self.rho}")

    @classmethod
    def calibrated(cls) -> "ModelParams":
        return cls(**CALIBRATED)

    def with_overrides(self, **kw) -> "ModelParams":
        fields = {k: getattr(self, k) for k in CALIBRATED}
        fields.update(kw)
        return ModelParams(**fields)

    def sigma(self, y):
        return 1.0 / np.sqrt(y)

    def drift_y(self, y):
        return self.kappa * (self.theta - y)

    def vol_y(self, y):
        return self.delta * np.sqrt(y)


@dataclass(frozen=True)
class UtilitySpec:
    """Power utility ``xi**(1-g)/(1-g)`` or the unweighted sum of two."""

    variant: Literal["power", "mixture"]
    gamma: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        if self.variant == "power":
            _check_gamma(self.gamma, "gamma")
        elif self.variant == "mixture":
            _check_gamma(self.gamma1, "gamma1")
            _check_gamma(self.gamma2, "gamma2")
            if self.gamma1 == self.gamma2:
                raise ConfigurationError("mixture needs gamma1 != gamma2")
        else:
            raise ConfigurationError(f"unknown utility variant {self.variant!r}")

    @classmethod
    def power(cls, gamma: float) -> "UtilitySpec":
        return cls("power", gamma=gamma)

    @classmethod
    def mixture(cls, gamma1: float, gamma2: float) -> "UtilitySpec":
        return cls("mixture", gamma1=gamma1, gamma2=gamma2)

    @property
    def gammas(self) -> tuple[float, ...]:
        if self.variant == "power":
            return (self.gamma,)
        return (self.gamma1, self.gamma2)

    def as_dict(self) -> dict:
        if self.variant == "power":
            return {"variant": "power", "gamma": self.gamma}
        return {"variant": "mixture", "gamma1": self.gamma1, "gamma2": self.gamma2}


def _check_gamma(g, name):
    if g is None or not g > 0 or g == 1:
        raise ConfigurationError(f"{name} must be > 0 and != 1, got {g}")


@dataclass(frozen=True)
class ExpansionCoefficients:
    """Zeroth/first Taylor coefficients of the model functions at (xbar, ybar).

    ``b0`` (log-price drift) enters the first-order correction only through
    ``lambda10``, which vanishes for x-independent models, so it is inert here.
    """

    lambda0: float
    lambda10: float
    lambda01: float
    b0: float
    c0: float
    sigma0: float
    beta0: float
    ybar: float
    xbar: float = 0.0


def _check_positive(v, name):
    v_arr = np.asarray(v, dtype=float)
    if np.any(~(v_arr > 0)):
        raise DomainError(f"{name} must be > 0, got {v}")


def sharpe_ratio(params: ModelParams, y):
    """Sharpe ratio ``(mu - r) * sqrt(y)``; accepts scalars or arrays."""
    _check_positive(y, "y")
    if np.ndim(y) == 0:
        return params.excess_drift * math.sqrt(y)
    return params.excess_drift * np.sqrt(y)


def expansion_coefficients(
    params: ModelParams, xbar: float, ybar: float
) -> ExpansionCoefficients:
    _check_positive(ybar, "ybar")
    sq = math.sqrt(ybar)
    sigma0 = 1.0 / sq
    return ExpansionCoefficients(
        lambda0=params.excess_drift * sq,
        lambda10=0.0,
        lambda01=params.excess_drift / (2.0 * sq),
        b0=params.excess_drift - 0.5 * sigma0**2,
        c0=params.kappa * (params.theta - ybar),
        sigma0=sigma0,
        beta0=params.delta * sq,
        ybar=ybar,
        xbar=xbar,
    )


def utility_value(spec: UtilitySpec, xi):
    _check_positive(xi, "xi")
    xi = np.asarray(xi, dtype=float)
    out = sum(xi ** (1.0 - g) / (1.0 - g) for g in spec.gammas)
    return float(out) if out.ndim == 0 else out


def utility_derivatives(spec: UtilitySpec, xi):
    """First and second derivative of U at ``xi``."""
    _check_positive(xi, "xi")
    xi = np.asarray(xi, dtype=float)
    d1 = sum(xi ** (-g) for g in spec.gammas)
    d2 = sum(-g * xi ** (-g - 1.0) for g in spec.gammas)
    return d1, d2


def terminal_risk_tolerance(spec: UtilitySpec, xi):
    """``-U'(xi)/U''(xi)``."""
    d1, d2 = utility_derivatives(spec, xi)
    out = -d1 / d2
    return float(out) if np.ndim(out) == 0 else out
