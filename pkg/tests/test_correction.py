import dataclasses
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from drawdown_sv import correction
from drawdown_sv import pipeline as pl
from drawdown_sv.correction import (
    CorrectionInputs,
    ab_coefficients,
    apply_dk,
    compute_q1,
    q1_terms,
    relative_correction,
    verify_rcalcs,
)
from drawdown_sv.errors import ConfigurationError, InternalConsistencyError
from drawdown_sv.market_model import ModelParams, UtilitySpec, expansion_coefficients, utility_value
from drawdown_sv.risk_tolerance import differentiate
from drawdown_sv.surface import Surface, SurfaceKind

from conftest import toy_grid

P = ModelParams.calibrated()
THETA = P.theta


def _pair(q_fn, r_fn, jc=40):
    g = toy_grid(j_count=jc, n_count=2)
    x = np.asarray(g.xi_nodes)
    q = Surface(g, np.vstack([q_fn(x)] * 3), SurfaceKind.VALUE_Q0)
    r = Surface(g, np.vstack([r_fn(x)] * 3), SurfaceKind.RISK_TOLERANCE)
    return q, differentiate(r)


def test_d1_vanishes_at_alpha(sol):
    assert np.all(apply_dk(sol.q0, sol.rd, 1).values[1:, 0] == 0.0)


def test_d2_on_quadratic_with_unit_tolerance():
    q, rd = _pair(lambda x: x**2, np.ones_like)
    np.testing.assert_allclose(apply_dk(q, rd, 2).values, 2.0, atol=1e-10)


def test_dk_rejects_order():
    q, rd = _pair(lambda x: x**2, np.ones_like)
    with pytest.raises(ValueError):
        apply_dk(q, rd, 4)


def test_d3_minus_2d1_matches_slope_form(sol):
    # D3 Q - 2 D1 Q against (R_xi - 1) D1 Q on the default run
    d1 = apply_dk(sol.q0, sol.rd, 1).values
    lhs = apply_dk(sol.q0, sol.rd, 3).values - 2.0 * d1
    rhs = (sol.rd.r1.values - 1.0) * d1
    inner = (slice(2, None), slice(3, sol.grid.j_count - 2))
    assert np.abs(lhs - rhs)[inner].max() / np.abs(rhs[inner]).max() <= 0.05


def test_ab_at_long_run_level():
    c = expansion_coefficients(P, 0.0, THETA)
    a, b = ab_coefficients(c, np.linspace(0, 1, 5), 1.0, P.rho)
    assert np.all(a == 0.0)
    # 0.0811**2 * rho * delta * sqrt(theta) / 2
    assert b == pytest.approx(0.0811**2 * 0.5241 * 0.6503 * 5.285310 / 2, rel=1e-6)
    assert b == pytest.approx(5.924e-3, abs=1e-6)


def test_ab_without_vol_of_vol():
    p = P.with_overrides(delta=0.0)
    assert ab_coefficients(expansion_coefficients(p, 0.0, THETA), 0.0, 1.0, p.rho)[1] == 0.0


def test_a_off_long_run_level():
    y = 1.05 * THETA
    c = expansion_coefficients(P, 0.0, y)
    a, _ = ab_coefficients(c, 0.25, 1.0, P.rho)
    assert a == pytest.approx(c.lambda01 * 0.5 * 0.75 * P.kappa * (THETA - y), rel=1e-14)
    a_shift, _ = ab_coefficients(c, 0.25, 1.0, P.rho, y=y + 1.0)
    assert a_shift - a == pytest.approx(c.lambda01, rel=1e-12)


def test_ab_rejects_time_outside_horizon():
    with pytest.raises(ValueError):
        ab_coefficients(expansion_coefficients(P, 0.0, THETA), 1.5, 1.0, P.rho)


@pytest.mark.parametrize("mult", [1.0, 1.05, 0.95])
def test_q1_boundaries(cfg, mult):
    _, q1, _ = pl.correction_for(cfg, mult * THETA)
    assert np.all(q1.values[0] == 0.0)
    assert np.all(q1.values[:, 0] == 0.0)


def test_q1_zero_without_vol_of_vol(cfg):
    flat = dataclasses.replace(cfg, model=P.with_overrides(delta=0.0))
    _, q1, ratio = pl.correction_for(flat, THETA)
    assert np.all(q1.values == 0.0) and np.all(ratio == 0.0)


def test_q1_routes_disagreement_raises(sol, monkeypatch):
    inp = CorrectionInputs(sol.q0, sol.rd, sol.coeffs, P, THETA)
    monkeypatch.setattr(correction, "_q1_chacko", lambda i: np.ones(sol.grid.shape))
    with pytest.raises(InternalConsistencyError):
        compute_q1(inp)


def test_inputs_require_matching_level(sol):
    with pytest.raises(ConfigurationError):
        CorrectionInputs(sol.q0, sol.rd, sol.coeffs, P, 1.05 * THETA)
    with pytest.raises(ConfigurationError):
        CorrectionInputs(sol.q0, sol.rd, sol.coeffs, P, THETA, horizon=2.0)


def test_drift_term_antisymmetric_about_theta(sol):
    h = 0.1 * THETA
    terms = []
    for y in (THETA + h, THETA - h):
        c = expansion_coefficients(P, 0.0, y)
        terms.append(q1_terms(CorrectionInputs(sol.q0, sol.rd, c, P, y))[0])
    scale = np.abs(terms[0]).max()
    assert scale > 0
    assert np.abs(terms[0] + terms[1]).max() <= 1e-10 * scale


def test_q1_top_slope_vanishes_under_refinement(cfg):
    slopes = []
    for jc in (100, 200):
        sub = dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, j_count=jc))
        sol, q1, _ = pl.correction_for(sub, THETA)
        slopes.append(np.abs(q1.values[:, -1] - q1.values[:, -2]).max() / sol.grid.dxi)
    assert slopes[0] / slopes[1] >= 1.5


def test_relative_correction_guard():
    g = toy_grid()
    q0 = Surface(g, np.zeros(g.shape), SurfaceKind.VALUE_Q0)
    q1 = Surface(g, np.ones(g.shape), SurfaceKind.CORRECTION_Q1)
    assert np.all(np.isfinite(relative_correction(q1, q0)))


def test_compute_q1_thread_safe(sol):
    inp = CorrectionInputs(sol.q0, sol.rd, sol.coeffs, P, THETA)
    ref = compute_q1(inp).values
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: compute_q1(inp).values, range(4)))
    for out in outs:
        np.testing.assert_array_equal(out, ref)


def test_identity_ii_exponential_pair():
    q, rd = _pair(lambda x: -np.exp(-x), np.ones_like)
    assert verify_rcalcs(q, rd).gaps["ii"] <= 1e-3


def test_identities_constant_value():
    q, rd = _pair(lambda x: np.full_like(x, -2.0), lambda x: x / 3)
    assert verify_rcalcs(q, rd).gaps == {"i": 0.0, "ii": 0.0, "iii": 0.0}


def test_identities_exact_power_pair_second_order():
    spec = UtilitySpec.power(3.0)
    coarse = verify_rcalcs(*_pair(lambda x: utility_value(spec, x), lambda x: x / 3, jc=40))
    fine = verify_rcalcs(*_pair(lambda x: utility_value(spec, x), lambda x: x / 3, jc=80))
    # exact continuous pair: the checker alone contributes O(dxi**2)
    assert fine.max_gap() <= 0.005
    for k in ("i", "ii", "iii"):
        assert coarse.gaps[k] / fine.gaps[k] > 3.0
