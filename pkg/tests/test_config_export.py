import numpy as np
import pytest

from drawdown_sv.config import OUTPUT_ENV, RunConfig, from_mapping, load_config
from drawdown_sv.errors import ConfigurationError
from drawdown_sv.export import header_lines, read_surface_csv, write_json, write_surface_csv

from conftest import toy_grid


def test_defaults():
    cfg = from_mapping({})
    assert cfg == RunConfig()
    assert cfg.model.theta == 27.9345 and cfg.utility.gamma == 3.0
    assert cfg.scenarios.y_multipliers == (1.0, 1.05, 0.95)


def test_yaml_round_trip(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(
        "delta: 0.0\nutility: {variant: mixture, gamma1: 3, gamma2: 1.5}\n"
        "grid: {j_count: 40}\nscenarios: {y_multipliers: [1.0, 1.1], m: 2}\n"
        "mc: {paths: 10, antithetic: true}\noutput_dir: results\n"
    )
    cfg = load_config(path)
    assert cfg.model.delta == 0.0 and cfg.utility.gammas == (3, 1.5)
    assert cfg.grid.j_count == 40 and cfg.scenarios.y_multipliers == (1.0, 1.1)
    assert cfg.mc.antithetic and cfg.output_dir == "results"
    assert from_mapping(cfg.as_dict()) == cfg


@pytest.mark.parametrize(
    "raw",
    [{"bogus": 1}, {"grid": {"cells": 3}}, {"scenarios": {"y_multipliers": [0.0]}}, {"mc": {"order": "second"}},
     {"utility": {"variant": "power", "gamma": 1.0}}, {"kappa": -1.0}, {"grid": [1, 2]}],
)
def test_invalid_mappings(raw):
    with pytest.raises(ConfigurationError):
        from_mapping(raw)


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [unclosed\n")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("3\n")
    with pytest.raises(ConfigurationError):
        load_config(scalar)


def test_output_dir_from_environment(monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, "/tmp/elsewhere")
    assert from_mapping({}).output_dir == "/tmp/elsewhere"
    assert from_mapping({"output_dir": "here"}).output_dir == "here"


def test_surface_csv_round_trip(tmp_path):
    g = toy_grid(j_count=8, n_count=3, dt=0.1)
    vals = np.random.default_rng(0).normal(size=g.shape) / 3
    head = header_lines({"a": 1}, g, {"note": "x"})
    rows = write_surface_csv(tmp_path / "s.csv", g, {"v": vals, "w": 2 * vals}, head)
    assert rows == g.shape[0] * g.shape[1]
    text = (tmp_path / "s.csv").read_text()
    assert text.startswith("# drawdown_sv ")
    assert '# config: {"a": 1}' in text and "# grid.j_count: 8" in text
    names, data = read_surface_csv(tmp_path / "s.csv")
    assert names == ["t", "xi", "v", "w"]
    np.testing.assert_array_equal(data[:, 2], vals.reshape(-1))
    np.testing.assert_array_equal(data[: g.j_count + 1, 1], g.xi_nodes)


def test_surface_csv_stride_keeps_initial_time(tmp_path):
    g = toy_grid(j_count=8, n_count=5, dt=0.1)
    rows = write_surface_csv(tmp_path / "s.csv", g, {"v": np.zeros(g.shape)}, [], t_stride=2)
    _, data = read_surface_csv(tmp_path / "s.csv")
    assert rows == 4 * 9
    assert sorted(set(np.round(data[:, 0], 12))) == [0.0, 0.1, 0.3, 0.5]


def test_json_is_sorted(tmp_path):
    write_json(tmp_path / "r.json", {"b": 1, "a": [1.5]})
    assert (tmp_path / "r.json").read_text().index('"a"') < (tmp_path / "r.json").read_text().index('"b"')
