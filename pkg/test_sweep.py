#!/usr/bin/env python3
"""
Tests for sweep configuration, per-cell error rows and deterministic output.
"""

import math

import pytest

import sweep
from conftest import complete_edges, make_graph
from errors import ConfigError, ConvergenceError, GuardExceededError
from hrg_config import Config
from sampler import replicate_seed
from scaling_fit import COLUMNS, SCHEMA_LINE, read_rows
from sweep import CellState, SweepConfig, run_sweep, status_of


def small_sweep(**kwargs):
    settings = dict(alphas=(0.75,), ns=(150, 100), seeds=2, measurements=("degrees", "components"))
    settings.update(kwargs)
    return SweepConfig(**settings)


def without_runtime(rows):
    def same(v):
        return "nan" if isinstance(v, float) and math.isnan(v) else v
    return [{k: same(v) for k, v in row.items() if k != "runtime_s"} for row in rows]


def test_config_validation():
    assert small_sweep().ns == (100, 150)
    with pytest.raises(ConfigError):
        small_sweep(alphas=(1.2,))
    with pytest.raises(ConfigError):
        small_sweep(ns=(1,))
    with pytest.raises(ConfigError):
        small_sweep(measurements=("spectrum",))
    with pytest.raises(ConfigError):
        small_sweep(seeds=0)
    with pytest.raises(ConfigError):
        small_sweep(workers=0)


def test_config_from_settings(tmp_path):
    config = Config(str(tmp_path / "missing.json"), {"seed": 9, "tol": 1e-6})
    settings = SweepConfig.from_config(config, ns=(200,), seeds=3)
    assert settings.base_seed == 9
    assert settings.tol == 1e-6
    assert settings.alphas == (0.75,)
    assert settings.seeds == 3
    assert len(settings.cells()) == 3
    assert (settings.dense_cap, settings.brute_force_cap) == (512, 20)


def test_dense_reference_row_follows_the_cap():
    rows = run_sweep(small_sweep(ns=(100,), seeds=1, measurements=("gap",)), progress=False).rows
    values = {row["measurement"]: row["value"] for row in rows}
    assert values["lambda1_dense"] == pytest.approx(values["lambda1"], abs=1e-6)
    rows = run_sweep(small_sweep(ns=(100,), seeds=1, measurements=("gap",), dense_cap=1),
                     progress=False).rows
    assert "lambda1_dense" not in {row["measurement"] for row in rows}


def test_cheeger_rows_follow_the_cap():
    g = make_graph(4, complete_edges(4))
    exact = sweep.measure_cheeger(CellState(small_sweep(brute_force_cap=20), g))
    assert [row["measurement"] for row in exact] == ["cheeger_h", "cheeger_ok"]
    assert exact[0]["method"] == "brute_force"
    assert exact[0]["value"] == pytest.approx(2 / 3)
    assert exact[1]["value"] == 1
    bounded = sweep.measure_cheeger(CellState(small_sweep(brute_force_cap=3), g))
    assert bounded[0]["method"] == "half_disk"
    assert bounded[1]["value"] == 1


def test_empty_measurement_list_writes_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    result = run_sweep(small_sweep(measurements=(), out=str(path)), progress=False)
    assert result.rows == [] and not result.partial
    assert path.read_text() == SCHEMA_LINE + "\n" + ",".join(COLUMNS) + "\n"


def test_rows_are_deterministic(tmp_path):
    path = tmp_path / "rows.csv"
    first = run_sweep(small_sweep(out=str(path)), progress=False)
    second = run_sweep(small_sweep(), progress=False)
    assert not first.partial
    assert without_runtime(first.rows) == without_runtime(second.rows)
    assert [row["n"] for row in first.rows[:3]] == [100, 100, 100]
    assert {row["seed"] for row in first.rows} == {replicate_seed(1, 0), replicate_seed(1, 1)}
    loaded = read_rows(path)
    assert [row["measurement"] for row in loaded] == [row["measurement"] for row in first.rows]


def test_workers_do_not_change_rows():
    serial = run_sweep(small_sweep(), progress=False)
    pooled = run_sweep(small_sweep(workers=2), progress=False)
    assert without_runtime(serial.rows) == without_runtime(pooled.rows)


def test_failed_measurement_becomes_a_row(monkeypatch):
    def stalled(cell):
        raise ConvergenceError("no convergence", best_value=0.25)

    monkeypatch.setitem(sweep.REGISTRY, "gap", stalled)
    result = run_sweep(small_sweep(ns=(100,), seeds=1, measurements=("gap", "degrees")),
                       progress=False)
    first = result.rows[0]
    assert (first["measurement"], first["status"], first["value"]) == ("gap", "no_convergence", 0.25)
    assert "ConvergenceError" in first["detail"]
    assert result.rows[1]["measurement"] == "avg_degree"
    assert result.failures == 1 and result.partial


def test_guard_rows_are_not_failures(monkeypatch):
    def guarded(cell):
        raise GuardExceededError("build_flow", cell.h.k, 1)

    monkeypatch.setitem(sweep.REGISTRY, "certificate", guarded)
    result = run_sweep(small_sweep(ns=(100,), seeds=1, measurements=("certificate",)),
                       progress=False)
    assert result.rows[0]["status"] == "guard"
    assert math.isnan(result.rows[0]["value"])
    assert not result.partial


def test_cell_that_cannot_be_built(monkeypatch):
    def broken(points, workers=1):
        raise MemoryError("no room")

    monkeypatch.setattr(sweep, "build_graph", broken)
    result = run_sweep(small_sweep(ns=(100,), seeds=1), progress=False)
    assert len(result.rows) == 1
    assert (result.rows[0]["measurement"], result.rows[0]["status"]) == ("cell", "error")
    assert result.partial


def test_status_codes():
    assert status_of(GuardExceededError("x", 2, 1)) == "guard"
    assert status_of(ConvergenceError("x")) == "no_convergence"
    assert status_of(RuntimeError("x")) == "error"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
