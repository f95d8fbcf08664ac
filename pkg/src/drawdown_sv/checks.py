"""Invariant and acceptance suite behind ``drawdown-sv check``."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np

from drawdown_sv import pipeline as pl
from drawdown_sv.config import RunConfig
from drawdown_sv.correction import verify_rcalcs
from drawdown_sv.market_model import UtilitySpec, utility_value
from drawdown_sv.risk_tolerance import consistency_vs_q0
from drawdown_sv.strategy import StrategyRequest, pi0
from drawdown_sv.value_zeroth import check_shape, transformed_residual

CONSISTENCY_TOL = 0.05
REFINEMENT_RATIO = 1.5
IDENTITY_TOL = 0.05
NEGLIGIBLE_CORRECTION = 0.05
MC_DISCRETIZATION = 0.002
SCALE_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    key: str
    name: str
    passed: bool
    measured: str
    threshold: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.key} {self.name}: measured {self.measured}; required {self.threshold}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


class _Suite:
    def __init__(self):
        self.results: list[CheckResult] = []

    def add(self, key, name, passed, measured, threshold):
        self.results.append(CheckResult(key, name, bool(passed), measured, threshold))


def coarse_j(cfg: RunConfig) -> int:
    return cfg.grid.j_count // 2


def run_checks(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> list[CheckResult]:
    say = progress or (lambda msg: None)
    s = _Suite()
    p = cfg.model
    theta = p.theta
    j_fine, j_coarse = cfg.grid.j_count, coarse_j(cfg)

    say("zeroth-order solves")
    sol = pl.solve_for(cfg)
    coarse = pl.solve_for(cfg, j_count=j_coarse)
    grid = sol.grid
    q, r = sol.q0.values, sol.r.values
    scale = sol.q0.scale()
    u = utility_value(cfg.utility, grid.xi_nodes)
    _, q1, ratio = pl.correction_for(cfg, theta)

    # 1. boundary and terminal exactness
    gaps = {
        "q0_terminal": float(np.max(np.abs(q[0] - u))),
        "q0_alpha": float(np.max(np.abs(q[:, 0] - u[0]))),
        "r_alpha": float(np.max(np.abs(r[1:, 0]))),
        "r_top": float(np.max(np.abs(r[1:, -1]))),
        "q1_terminal": float(np.max(np.abs(q1.values[0]))),
        "q1_alpha": float(np.max(np.abs(q1.values[:, 0]))),
    }
    s.add("C1", "boundary/terminal exactness", max(gaps.values()) == 0.0,
          ", ".join(f"{k}={_fmt(v)}" for k, v in gaps.items()), "all exactly 0")

    # 2. shape on power and mixture utilities
    for label, util in (("power", UtilitySpec.power(3.0)), ("mixture", UtilitySpec.mixture(3.0, 1.5))):
        rep = check_shape(pl.solve_zeroth(p, util, grid.alpha, grid.horizon, j_fine, grid.safety, theta).q0)
        s.add("C2", f"shape of Q0 ({label})", rep.passed,
              f"min fwd diff {_fmt(rep.worst_monotonicity)} at {rep.worst_monotonicity_at}, "
              f"max 2nd diff {_fmt(rep.worst_concavity)} at {rep.worst_concavity_at}",
              f"fwd >= -{_fmt(rep.tolerance)}, 2nd <= {_fmt(rep.tolerance)}")

    # 3. cross-solver consistency
    say("cross-solver consistency and residuals")
    c_f = consistency_vs_q0(sol.r, sol.q0)
    c_c = consistency_vs_q0(coarse.r, coarse.q0)
    s.add("C3", "R vs -Q0_xi/Q0_xixi", c_f <= CONSISTENCY_TOL, _fmt(c_f), f"<= {CONSISTENCY_TOL}")
    s.add("C3", f"consistency refinement J={j_coarse}->{j_fine}", c_c / c_f >= REFINEMENT_RATIO,
          f"ratio {_fmt(c_c / c_f)} ({_fmt(c_c)} -> {_fmt(c_f)})", f">= {REFINEMENT_RATIO}")

    # 4. transformed residual
    lam0 = sol.coeffs.lambda0
    res_f = transformed_residual(sol.q0, sol.r, lam0)
    res_c = transformed_residual(coarse.q0, coarse.r, lam0)
    s.add("C4", f"residual refinement J={j_coarse}->{j_fine}", res_c / res_f >= REFINEMENT_RATIO,
          f"ratio {_fmt(res_c / res_f)} ({_fmt(res_c)} -> {_fmt(res_f)})", f">= {REFINEMENT_RATIO}")
    bound = 10.0 * (grid.dt + grid.dxi) * scale
    s.add("C4", "residual size", res_f <= bound, _fmt(res_f), f"<= 10 (dt + dxi) scale = {_fmt(bound)}")

    # 5. exact-zero correction with delta = 0 at y = theta
    flat = dataclasses.replace(cfg, model=p.with_overrides(delta=0.0))
    _, q1_flat, _ = pl.correction_for(flat, theta)
    _, _, pi1_flat = pl.strategies_for(flat, theta)
    z = (float(np.max(np.abs(q1_flat.values))), float(np.max(np.abs(pi1_flat.values))))
    s.add("C5", "Q1 and pi1 vanish (delta=0, y=theta)", z == (0.0, 0.0),
          f"max|Q1|={_fmt(z[0])}, max|pi1|={_fmt(z[1])}", "exactly 0")

    # 6. identities
    say("identity suite")
    id_f = verify_rcalcs(sol.q0, sol.rd).gaps
    id_c = verify_rcalcs(coarse.q0, coarse.rd).gaps
    for k in id_f:
        ok = id_f[k] <= IDENTITY_TOL and id_f[k] < id_c[k]
        s.add("C6", f"identity ({k})", ok, f"{_fmt(id_c[k])} (J={j_coarse}) -> {_fmt(id_f[k])} (J={j_fine})",
              f"<= {IDENTITY_TOL} and decreasing")

    # 7/8. Monte Carlo
    say("Monte Carlo rollouts")
    mc_cfg = dataclasses.replace(
        cfg, mc=dataclasses.replace(cfg.mc, freeze_volatility=True, initial_xi=0.75, y_multiplier=1.0)
    )
    mc, ref = pl.run_mc(mc_cfg, strategy="zeroth")
    allow = 3.0 * mc.std_error + MC_DISCRETIZATION * abs(ref)
    s.add("C7", "MC vs Q0(0, 0.75), frozen volatility", abs(mc.mean_utility - ref) <= allow,
          f"|{_fmt(mc.mean_utility)} - {_fmt(ref)}| = {_fmt(abs(mc.mean_utility - ref))}",
          f"<= 3 SE + 0.2% = {_fmt(allow)}")
    zero, ref0 = pl.run_mc(dataclasses.replace(cfg, mc=dataclasses.replace(cfg.mc, paths=1000, steps=50)), strategy="zero")
    u0 = utility_value(cfg.utility, cfg.mc.initial_xi)
    s.add("M1", "MC with zero strategy", zero.mean_utility == u0 and zero.std_error == 0.0,
          f"mean {_fmt(zero.mean_utility)}, se {_fmt(zero.std_error)}", f"mean {_fmt(u0)}, se 0")
    sv_cfg = dataclasses.replace(cfg, mc=dataclasses.replace(cfg.mc, paths=20_000, steps=250, freeze_volatility=False))
    sv, _ = pl.run_mc(sv_cfg, strategy="first", keep_paths=True)
    runs = (mc, zero, sv)
    s.add("C8", "drawdown violations over all MC runs", sum(x.violation_count for x in runs) == 0,
          str(sum(x.violation_count for x in runs)), "0")
    in_range = bool(np.all((sv.terminal_ratio >= grid.alpha) & (sv.terminal_ratio <= 1.0)))
    s.add("M2", "terminal ratio in [alpha, 1] (stochastic volatility run)", in_range,
          f"[{_fmt(sv.terminal_ratio.min())}, {_fmt(sv.terminal_ratio.max())}]", f"[{grid.alpha}, 1]")

    # 9. negligible value correction
    worst = float(np.max(np.abs(ratio[-1])))
    s.add("C9", "max |Q1/Q0| at t=0, y=theta", worst <= NEGLIGIBLE_CORRECTION, _fmt(worst),
          f"<= {NEGLIGIBLE_CORRECTION}")

    # 10. strategy correction sign
    say("strategy scenarios")
    meds = {}
    for mult in (1.05, 0.95):
        sol_y, _, p1 = pl.strategies_for(cfg, mult * theta)
        meds[mult] = float(np.median(p1.values[-1, 1:-1]))
    s.add("C10", "median pi1 at t=0 (y=1.05 theta)", meds[1.05] > 0, _fmt(meds[1.05]), "> 0")
    s.add("C10", "median pi1 at t=0 (y=0.95 theta)", meds[0.95] < 0, _fmt(meds[0.95]), "< 0")

    # module invariants
    s.add("M3", "R >= 0", r.min() >= -1e-12, _fmt(r.min()), ">= -1e-12")
    neumann = float(np.max(np.abs(q[1:, -1] - q[1:, -2])))
    s.add("M4", "Q0 copy rule at xi=1 (n>=1)", neumann == 0.0, _fmt(neumann), "exactly 0")
    growth = float(np.min(q[1:, 1:-1] - q[:-1, 1:-1]))
    s.add("M5", "Q0 non-decreasing in time to maturity (interior)", growth >= -SCALE_TOL * scale,
          _fmt(growth), f">= -{_fmt(SCALE_TOL * scale)}")
    rmax = r.max(axis=1)
    rise = float(np.max(np.diff(rmax)))
    s.add("M6", "max_xi R non-increasing across layers", rise <= SCALE_TOL * grid.r_max, _fmt(rise),
          f"<= {_fmt(SCALE_TOL * grid.r_max)}")
    req = StrategyRequest(m=1.0, y=theta)
    p0 = pi0(req, sol.rd, p).values
    edge = float(max(np.abs(p0[1:, 0]).max(), np.abs(p0[1:, -1]).max()))
    s.add("M7", "pi0 >= 0 and zero at both ends for t<T", p0.min() >= 0 and edge == 0.0,
          f"min {_fmt(p0.min())}, edge {_fmt(edge)}", "min >= 0, edge 0")
    tail = np.diff(p0[1:, -5:], axis=1)
    bad = np.nonzero((tail > 1e-9).any(axis=1))[0] + 1
    s.add("M8", "pi0 non-increasing over last 5 nodes for t<T", bad.size == 0,
          f"{bad.size} layers violate" + (f" (n={bad.min()}..{bad.max()})" if bad.size else ""),
          "no layer violates (tol 1e-9)")
    p0_2 = pi0(StrategyRequest(m=2.0, y=theta), sol.rd, p).values
    _, a1, b1 = pl.strategies_for(cfg, theta, m=1.0)
    _, a2, b2 = pl.strategies_for(cfg, theta, m=2.0)
    exact = np.array_equal(p0_2, 2 * p0) and np.array_equal(b2.values, 2 * b1.values)
    s.add("M9", "strategies linear in m", exact, "exact" if exact else "inexact", "exact factor 2")
    top_f = float(np.max(np.abs(q1.values[:, -1] - q1.values[:, -2])) / grid.dxi)
    _, q1_c, _ = pl.correction_for(dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, j_count=j_coarse)), theta)
    top_c = float(np.max(np.abs(q1_c.values[:, -1] - q1_c.values[:, -2])) / coarse.grid.dxi)
    s.add("M10", f"Q1 discrete slope at xi=1, refinement J={j_coarse}->{j_fine}",
          top_c / top_f >= REFINEMENT_RATIO,
          f"{_fmt(top_c)} -> {_fmt(top_f)} (ratio {_fmt(top_c / top_f)})", f"ratio >= {REFINEMENT_RATIO}")
    return s.results


def format_report(results: list[CheckResult], cfg: RunConfig) -> str:
    from drawdown_sv.export import header_lines

    lines = [f"# {h}" for h in header_lines(cfg.as_dict())]
    lines += [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"SUMMARY {n_pass}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
