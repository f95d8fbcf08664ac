import math

import numpy as np
import pytest

from drawdown_sv.errors import ConfigurationError, StabilityWarning
from drawdown_sv.market_model import ModelParams, UtilitySpec
from drawdown_sv.mesh import build_grid, stable_dt, xi_nodes

from conftest import quiet_grid


def test_stable_dt_plug_in():
    assert stable_dt(1.0, 1.0, 0.01, 0.5) == pytest.approx(5e-5, rel=1e-14)


def test_stable_dt_default_configuration():
    lam0 = 0.0811 * math.sqrt(27.9345)
    assert stable_dt(lam0, 1 / 3, 0.5 / 200, 0.5) == pytest.approx(1.53077e-4, rel=1e-5)


def test_stable_dt_caps_without_diffusion():
    with pytest.warns(StabilityWarning):
        assert stable_dt(0.0, 1.0, 0.01, horizon=2.0) == 2.0 / 16


@pytest.mark.parametrize("args", [(1.0, 1.0, 0.0), (1.0, 1.0, 0.01, 0.0), (1.0, 1.0, 0.01, 1.5), (-1.0, 1.0, 0.01)])
def test_stable_dt_rejects_bad_input(args):
    with pytest.raises(ConfigurationError):
        stable_dt(*args)


def test_no_diffusion_grid():
    g = quiet_grid(alpha=0.5, horizon=1.0, j_count=10, params=ModelParams.calibrated().with_overrides(excess_drift=0.0))
    assert g.n_count == 16 and g.dt_capped
    np.testing.assert_allclose(g.xi_nodes, np.linspace(0.5, 1.0, 11), atol=1e-15)
    assert g.xi_nodes[-1] == 1.0 and g.xi_nodes[0] == 0.5


def test_default_grid():
    g = build_grid()
    assert g.dxi == pytest.approx(0.0025, abs=1e-16)
    # ceil(1 / 1.530686e-4); 6536 follows only from rounding dt to 1.53e-4 first
    assert g.n_count == 6533
    assert g.dt <= stable_dt(g.lambda0, g.r_max, g.dxi, g.safety)
    assert g.dt * g.n_count == pytest.approx(1.0, abs=1e-15)
    assert g.shape == (6534, 201)
    assert g.t_nodes[0] == 1.0 and g.t_nodes[-1] == 0.0


def test_grid_r_max_tracks_utility():
    g = build_grid(j_count=20, utility=UtilitySpec.mixture(3.0, 1.5))
    assert g.r_max == pytest.approx(2 / 4.5)


def test_grid_off_theta_uses_local_sharpe():
    p = ModelParams.calibrated()
    g = build_grid(j_count=20, ybar=1.05 * p.theta)
    assert g.lambda0 == pytest.approx(0.0811 * math.sqrt(1.05 * p.theta))


@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=1.0), dict(horizon=0.0), dict(j_count=4), dict(j_count=10.5)])
def test_build_grid_validation(kw):
    with pytest.raises(ConfigurationError):
        build_grid(**kw)


def test_nodes_read_only():
    nodes = xi_nodes(0.5, 8)
    with pytest.raises(ValueError):
        nodes[0] = 0.0
