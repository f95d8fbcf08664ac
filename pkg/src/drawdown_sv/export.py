"""CSV and JSON writers with '#'-prefixed configuration headers."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from drawdown_sv.mesh import Grid

FLOAT_FMT = "%.17g"


def header_lines(config: dict, grid: Grid | None = None, extra: dict | None = None) -> list[str]:
    from drawdown_sv import __version__

    lines = [f"drawdown_sv {__version__}", "config: " + json.dumps(config, sort_keys=True)]
    if grid is not None:
        lines += [f"grid.{k}: {v!r}" for k, v in grid.describe().items()]
    for k, v in (extra or {}).items():
        lines.append(f"{k}: {v!r}")
    return lines


def write_surface_csv(
    path: str | Path,
    grid: Grid,
    columns: dict[str, np.ndarray],
    header: list[str],
    t_stride: int = 1,
) -> int:
    """Write one row per ``(t, xi)`` node; returns the number of data rows.

    Rows run from maturity backwards in time, and over xi within each layer.
    ``t_stride`` keeps every k-th time layer (the t = 0 layer is always kept).
    """
    layers = np.arange(0, grid.n_count + 1, t_stride)
    if layers[-1] != grid.n_count:
        layers = np.append(layers, grid.n_count)
    t = np.repeat(grid.t_nodes[layers], grid.j_count + 1)
    xi = np.tile(grid.xi_nodes, len(layers))
    table = np.column_stack([t, xi] + [np.asarray(v)[layers].reshape(-1) for v in columns.values()])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(["t", "xi", *columns]) + "\n")
        np.savetxt(fh, table, fmt=FLOAT_FMT, delimiter=",")
    return table.shape[0]


def write_json(path: str | Path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")


def read_surface_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Column names and data of a file written by :func:`write_surface_csv`."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                names = line.strip().split(",")
                break
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return names, data
