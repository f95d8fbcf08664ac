import dataclasses
import logging

import numpy as np
import pytest

from drawdown_sv import pipeline as pl
from drawdown_sv.errors import ConfigurationError
from drawdown_sv.market_model import ModelParams
from drawdown_sv.strategy import StrategyRequest, pi0, pi1, pi1_dk, pi1_from_expansion, strategy_lookup
from drawdown_sv.surface import Surface, SurfaceKind

from conftest import toy_grid

P = ModelParams.calibrated()
THETA = P.theta


def test_pi0_terminal_example(sol):
    p0 = pi0(StrategyRequest(), sol.rd, P)
    j = 100  # xi = 0.75
    assert sol.grid.xi_nodes[j] == 0.75
    assert p0.values[0, j] == pytest.approx(0.0811 * 27.9345 * 0.25, rel=1e-14)
    assert p0.values[0, j] == pytest.approx(0.56637, abs=1e-5)


def test_pi0_sign_and_boundaries(sol):
    p0 = pi0(StrategyRequest(), sol.rd, P).values
    assert p0.min() >= 0.0
    assert np.all(p0[1:, 0] == 0.0) and np.all(p0[1:, -1] == 0.0)


def test_pi0_liquidates_near_top(sol):
    p0 = pi0(StrategyRequest(), sol.rd, P).values
    tail = np.diff(p0[1:, -5:], axis=1)
    assert np.all(tail <= 1e-9)


def test_pi1_terminal_zero(cfg):
    for mult in (1.0, 1.05):
        _, _, p1 = pl.strategies_for(cfg, mult * THETA)
        assert np.all(p1.values[0] == 0.0)


def test_pi1_zero_without_vol_of_vol(cfg):
    flat = dataclasses.replace(cfg, model=P.with_overrides(delta=0.0))
    _, _, p1 = pl.strategies_for(flat, THETA)
    assert np.all(p1.values == 0.0)


def test_strategies_linear_in_m(cfg):
    _, a1, b1 = pl.strategies_for(cfg, 1.05 * THETA, m=1.0)
    _, a2, b2 = pl.strategies_for(cfg, 1.05 * THETA, m=2.0)
    np.testing.assert_array_equal(a2.values, 2 * a1.values)
    np.testing.assert_array_equal(b2.values, 2 * b1.values)
    assert a2.m == 2.0


def test_pi1_requires_matching_level(sol):
    with pytest.raises(ConfigurationError):
        pi1(StrategyRequest(y=1.05 * THETA), sol.rd, sol.q0, sol.coeffs, P)


@pytest.mark.parametrize("kw", [dict(m=0.0), dict(y=-1.0)])
def test_request_validation(kw):
    with pytest.raises(ConfigurationError):
        StrategyRequest(**kw)


def test_debug_mode_reports_assembly_gap(cfg, caplog):
    sol = pl.solve_for(cfg, 1.05 * THETA)
    req = StrategyRequest(y=1.05 * THETA)
    with caplog.at_level(logging.DEBUG, logger="drawdown_sv.strategy"):
        plain = pi1(req, sol.rd, sol.q0, sol.coeffs, P)
        debug = pi1(req, sol.rd, sol.q0, sol.coeffs, P, debug=True)
    np.testing.assert_array_equal(plain.values, debug.values)
    assert any("pi1 assemblies" in r.message for r in caplog.records)
    assert pi1_dk(req, sol.rd, sol.q0, P).values.shape == sol.grid.shape


def test_expansion_form_vanishes_with_correction(cfg):
    flat = dataclasses.replace(cfg, model=P.with_overrides(delta=0.0))
    sol = pl.solve_for(flat, THETA)
    alt = pi1_from_expansion(StrategyRequest(), sol.rd, sol.coeffs, flat.model)
    assert np.all(alt.values == 0.0)


def _surface(values):
    g = toy_grid(j_count=4, n_count=1, dt=0.5)
    return Surface(g, np.asarray(values, float), SurfaceKind.STRATEGY)


def test_lookup_exact_at_nodes():
    rng = np.random.default_rng(3)
    s = _surface(rng.normal(size=(2, 5)))
    g = s.grid
    for n, t in enumerate(g.t_nodes):
        for j, x in enumerate(g.xi_nodes):
            assert strategy_lookup(s, t, x) == s.values[n, j]


def test_lookup_midpoints():
    s = _surface(np.full((2, 5), 0.7))
    assert strategy_lookup(s, 0.25, 0.5625) == pytest.approx(0.7, abs=1e-15)
    s = _surface([[0, 0, 1, 1, 1], [0, 0, 1, 1, 1]])
    assert strategy_lookup(s, 0.25, 0.6875) == pytest.approx(0.5, abs=1e-15)


def test_lookup_vectorised_and_clamped():
    s = _surface([[0, 1, 2, 3, 4], [0, 1, 2, 3, 4]])
    out = strategy_lookup(s, np.array([0.0, 0.5]), np.array([0.1, 2.0]))
    np.testing.assert_array_equal(out, [0.0, 4.0])


@pytest.mark.parametrize("t", [-0.1, 0.6])
def test_lookup_rejects_time_outside_horizon(t):
    with pytest.raises(ValueError):
        strategy_lookup(_surface(np.zeros((2, 5))), t, 0.7)
