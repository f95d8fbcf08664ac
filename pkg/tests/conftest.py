import warnings
from fractions import Fraction

import numpy as np
import pytest

from drawdown_sv import pipeline as pl
from drawdown_sv.config import RunConfig
from drawdown_sv.errors import StabilityWarning
from drawdown_sv.mesh import Grid, xi_nodes


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def sol(cfg):
    return pl.solve_for(cfg)


@pytest.fixture(scope="session")
def sol_coarse(cfg):
    return pl.solve_for(cfg, j_count=100)


@pytest.fixture(scope="session")
def small_cfg():
    from drawdown_sv.config import from_mapping

    return from_mapping({"grid": {"j_count": 20}, "mc": {"paths": 400, "steps": 50}})


def toy_grid(j_count=4, n_count=1, dt=1e-4, lambda0=1.0, alpha=0.5):
    """Hand-sized grid that bypasses the build-time minimum on J."""
    return Grid(
        alpha=alpha,
        horizon=n_count * dt,
        j_count=j_count,
        n_count=n_count,
        dt=dt,
        lambda0=lambda0,
        r_max=1.0 / 3.0,
        xi_nodes=xi_nodes(alpha, j_count),
    )


def frac_nodes(j_count=4, alpha=Fraction(1, 2)):
    return [alpha + (1 - alpha) * Fraction(j, j_count) for j in range(j_count + 1)]


def quiet_grid(**kw):
    from drawdown_sv.mesh import build_grid

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityWarning)
        return build_grid(**kw)


def max_rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
