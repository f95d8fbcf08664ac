"""Command-line front end: ``drawdown-sv <verb> [config.yaml] [flags]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from drawdown_sv import pipeline as pl
from drawdown_sv.checks import format_report, run_checks
from drawdown_sv.config import RunConfig, load_config
from drawdown_sv.errors import DrawdownSVError
from drawdown_sv.export import header_lines, write_json, write_surface_csv

log = logging.getLogger("drawdown_sv")


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _header(cfg, grid, **extra):
    return header_lines(cfg.as_dict(), grid, extra or None)


def cmd_solve(cfg: RunConfig, t_stride: int = 1) -> list[Path]:
    out = _out(cfg)
    # zeroth-order surfaces are solved at the first scenario level
    _, y = pl.scenario_levels(cfg)[0]
    sol = pl.solve_for(cfg, y)
    head = _header(cfg, sol.grid, y=y, lambda0=sol.coeffs.lambda0)
    written = []
    for name, surf in (("q0", sol.q0), ("r", sol.r)):
        path = out / f"{name}.csv"
        write_surface_csv(path, sol.grid, {"value": surf.values}, head, t_stride)
        written.append(path)
    return written


def cmd_correct(cfg: RunConfig, t_stride: int = 1) -> list[Path]:
    out = _out(cfg)
    written, summary = [], {}
    for mult, y in pl.scenario_levels(cfg):
        sol, q1, ratio = pl.correction_for(cfg, y)
        path = out / f"q1_y{pl.tag(mult)}.csv"
        write_surface_csv(
            path,
            sol.grid,
            {"q1": q1.values, "q1_over_q0": ratio},
            _header(cfg, sol.grid, y=y, y_multiplier=mult),
            t_stride,
        )
        written.append(path)
        summary[pl.tag(mult)] = {
            "y": y,
            "max_abs_ratio": float(np.max(np.abs(ratio))),
            "max_abs_ratio_t0": float(np.max(np.abs(ratio[-1]))),
        }
    path = out / "q1_summary.json"
    write_json(path, {"header": _header(cfg, None), "scenarios": summary})
    return written + [path]


def cmd_strategy(cfg: RunConfig, t_stride: int = 1) -> list[Path]:
    out = _out(cfg)
    written = []
    for mult, y in pl.scenario_levels(cfg):
        sol, p0, p1 = pl.strategies_for(cfg, y)
        path = out / f"strategy_y{pl.tag(mult)}.csv"
        write_surface_csv(
            path,
            sol.grid,
            {"pi0": p0.values, "pi1": p1.values, "pi_total": p0.values + p1.values},
            _header(cfg, sol.grid, y=y, y_multiplier=mult, m=cfg.scenarios.m),
            t_stride,
        )
        written.append(path)
    return written


def cmd_simulate(cfg: RunConfig, strategy: str | None = None, per_path: bool = False) -> list[Path]:
    out = _out(cfg)
    res, ref = pl.run_mc(cfg, strategy=strategy, keep_paths=per_path)
    record = res.to_dict()
    record.update(
        header=_header(cfg, None, strategy=strategy or cfg.mc.order),
        pde_reference=ref,
        z_score=(res.mean_utility - ref) / res.std_error if res.std_error > 0 else None,
    )
    path = out / "mc_summary.json"
    write_json(path, record)
    written = [path]
    if per_path:
        path = out / "mc_paths.csv"
        table = np.column_stack(
            [np.arange(res.paths), res.terminal_ratio, res.absorbed.astype(float), res.utilities]
        )
        with open(path, "w", newline="\n") as fh:
            for line in record["header"]:
                fh.write(f"# {line}\n")
            fh.write("path,terminal_ratio,absorbed,utility\n")
            np.savetxt(fh, table, fmt="%.17g", delimiter=",")
        written.append(path)
    return written


def cmd_sweep(cfg: RunConfig, t_stride: int = 1) -> list[Path]:
    """Correction and strategy surfaces for every scenario level."""
    return cmd_correct(cfg, t_stride) + cmd_strategy(cfg, t_stride)


def cmd_check(cfg: RunConfig) -> tuple[Path, bool]:
    results = run_checks(cfg, progress=log.info)
    path = _out(cfg) / "check_report.txt"
    path.write_text(format_report(results, cfg))
    return path, all(r.passed for r in results)


def apply_overrides(cfg: RunConfig, ns: argparse.Namespace) -> RunConfig:
    grid = {k: v for k, v in (("alpha", ns.alpha), ("horizon", ns.horizon), ("j_count", ns.j)) if v is not None}
    mc = {k: v for k, v in (("paths", ns.paths), ("seed", ns.seed)) if v is not None}
    if ns.y_mult is not None:
        mc["y_multiplier"] = ns.y_mult
        cfg = cfg.replace(scenarios=dataclasses.replace(cfg.scenarios, y_multipliers=(ns.y_mult,)))
    if ns.m is not None:
        cfg = cfg.replace(scenarios=dataclasses.replace(cfg.scenarios, m=ns.m))
    if grid:
        cfg = cfg.replace(grid=dataclasses.replace(cfg.grid, **grid))
    if mc:
        cfg = cfg.replace(mc=dataclasses.replace(cfg.mc, **mc))
    if ns.out is not None:
        cfg = cfg.replace(output_dir=ns.out)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", nargs="?", help="YAML configuration file")
    common.add_argument("--alpha", type=float)
    common.add_argument("--horizon", type=float)
    common.add_argument("--j", type=int, help="number of xi intervals")
    common.add_argument("--y-mult", type=float, help="single scenario level as a multiple of theta")
    common.add_argument("--m", type=float, help="running maximum for strategy surfaces")
    common.add_argument("--paths", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--t-stride", type=int, default=1, help="keep every k-th time layer in CSVs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="drawdown-sv", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("solve", "zeroth-order value and risk tolerance surfaces"),
        ("correct", "first-order value correction per scenario"),
        ("strategy", "zeroth- and first-order strategy surfaces per scenario"),
        ("sweep", "correct and strategy over all scenarios"),
        ("check", "full invariant and acceptance suite"),
    ):
        sub.add_parser(verb, parents=[common], help=text)
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo rollout of a strategy")
    sim.add_argument("--strategy", choices=("zero", "zeroth", "first"))
    sim.add_argument("--per-path", action="store_true", help="also write per-path outcomes")
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if ns.t_stride < 1:
        print("error: --t-stride must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = apply_overrides(load_config(ns.config), ns)
        if ns.verb == "check":
            path, ok = cmd_check(cfg)
            print(path)
            return 0 if ok else 1
        if ns.verb == "simulate":
            written = cmd_simulate(cfg, ns.strategy, ns.per_path)
        else:
            handler = {"solve": cmd_solve, "correct": cmd_correct, "strategy": cmd_strategy, "sweep": cmd_sweep}
            written = handler[ns.verb](cfg, ns.t_stride)
    except (DrawdownSVError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
