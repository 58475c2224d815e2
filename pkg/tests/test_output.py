"""Tests for the run directory files"""

import csv
import inspect
import os
from pathlib import Path

import numpy as np
import pytest

from phasonsim import LinearSolver, OutputFormat, Profile
from phasonsim.config import parse_config
from phasonsim.dynamics import SolverConfig, project_initial_data, run
from phasonsim.errors import GridMismatchError
from phasonsim.grid import Grid
from phasonsim.material import MaterialParams
from phasonsim.output import (
    TIMESERIES_COLUMNS,
    read_snapshot,
    snapshot_indices,
    timeseries_rows,
    write_run_outputs,
    write_snapshot,
    write_table,
    write_timeseries,
)
from phasonsim.profiles import ProfileSpec
from phasonsim.scenarios import scenario_config_text

ADMISSIBLE = MaterialParams(
    lam=0.0, mu=1.0, k0=1.0, k1=1.0, k2=0.5, k2p=0.25, k3=0.0, k3p=0.2
)


def file_path_in_test_dir(file_name: str) -> str:
    """Return the path to a file in the tests directory"""
    tests_path = os.path.dirname(
        os.path.abspath(inspect.getfile(inspect.currentframe()))  # type: ignore
    )

    return f"{tests_path}/{file_name}"


REFERENCE_TIMESERIES = Path(file_path_in_test_dir("testdata/decoupled_diffusion.csv"))


def coupled_run(grid: Grid, **kwargs):  # type: ignore[no-untyped-def]
    state0 = project_initial_data(
        grid,
        ProfileSpec(Profile.SINE_BUMP, 0.1, (1.0, 0.0, 0.0)),
        ProfileSpec(),
        ProfileSpec(Profile.GAUSSIAN, 0.05, (0.0, 1.0, 0.0)),
    )
    return run(grid, ADMISSIBLE, state0, SolverConfig(**kwargs))


def test_zero_run_timeseries(tmp_path):
    grid = Grid.uniform(2, 5)
    state0 = project_initial_data(grid, ProfileSpec(), ProfileSpec(), ProfileSpec())
    traj = run(grid, ADMISSIBLE, state0, SolverConfig(dt=0.01, t_end=0.02))
    path = write_timeseries(traj, tmp_path / "ts.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(TIMESERIES_COLUMNS)
    rows = list(csv.reader(lines[1:]))
    assert [r[0] for r in rows] == ["0", "1", "2"]
    assert [float(r[1]) for r in rows] == [0.0, 0.01, 0.02]
    for row in rows:
        assert all(float(v) == 0.0 for v in row[2:])


def test_timeseries_follows_record_cadence():
    grid = Grid.uniform(2, 5)
    traj = coupled_run(grid, dt=0.01, t_end=0.1, record_every=4)
    rows = timeseries_rows(traj)
    assert [r[0] for r in rows] == ["0", "4", "8", "10"]
    assert float(rows[-1][2]) == traj.energies[-1]
    assert all(len(r) == len(TIMESERIES_COLUMNS) for r in rows)


def test_rerun_is_byte_identical(tmp_path):
    grid = Grid.uniform(2, 7)
    first = write_run_outputs(
        coupled_run(grid, dt=0.01, t_end=0.05),
        tmp_path / "a",
        (OutputFormat.CSV, OutputFormat.SNAPSHOT),
    )
    second = write_run_outputs(
        coupled_run(grid, dt=0.01, t_end=0.05),
        tmp_path / "b",
        (OutputFormat.CSV, OutputFormat.SNAPSHOT),
    )
    for kind in ("timeseries", "snapshots"):
        assert len(first[kind]) == len(second[kind])
        for a, b in zip(first[kind], second[kind]):
            assert a.name == b.name
            assert a.read_bytes() == b.read_bytes()


def test_snapshot_layout_and_round_trip(tmp_path):
    grid = Grid(2, (3, 3), (0.25, 0.25), bc_u=np.array([0.5, 0.0, 0.0]))
    traj = coupled_run(grid, dt=0.01, t_end=0.03)
    state = traj.final_state
    path = write_snapshot(state, tmp_path / "snap.txt")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[1:3] == ["dim 2", "n 3 3"]
    assert len(lines) == 5 + 9
    assert lines[5].split()[:2] == ["1", "1"]
    assert len(lines[5].split()) == 2 + 9

    snap = read_snapshot(path)
    assert snap.n == (3, 3)
    assert snap.t == state.t
    back = snap.to_state(grid)
    assert np.array_equal(back.u.values, state.u.values)
    assert np.array_equal(back.ut.values, state.ut.values)
    assert np.array_equal(back.nu.values, state.nu.values)
    with pytest.raises(GridMismatchError):
        snap.to_state(Grid.uniform(2, 4))


def test_read_snapshot_rejects_other_files(tmp_path):
    path = tmp_path / "other.txt"
    path.write_text("hello\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_snapshot_indices():
    grid = Grid.uniform(2, 3)
    traj = coupled_run(grid, dt=0.01, t_end=0.05)
    assert snapshot_indices(traj, 0) == [0, 5]
    assert snapshot_indices(traj, 2) == [0, 2, 4, 5]
    assert snapshot_indices(traj, 5) == [0, 5]


def test_run_outputs_with_images(tmp_path):
    grid = Grid.uniform(2, 5)
    traj = coupled_run(grid, dt=0.01, t_end=0.02)
    written = write_run_outputs(
        traj, tmp_path, (OutputFormat.PNG,), config_text="# config\n"
    )
    assert (tmp_path / "config.txt").read_text(encoding="utf-8") == "# config\n"
    assert "timeseries" not in written
    assert sorted(p.name for p in written["images"]) == [
        "nu_000000.png",
        "nu_000002.png",
        "u_000000.png",
        "u_000002.png",
    ]


def test_write_table(tmp_path):
    path = write_table(tmp_path / "t.csv", ("a", "b"), [(1, 0.1), ("x", 2.5)])
    assert path.read_text(encoding="utf-8") == "a,b\n1,0.1\nx,2.5\n"


def test_decoupled_diffusion_matches_reference(tmp_path):
    """
    The eigenmode decays by one scalar factor per step, so every column of the
    reference follows in closed form.

    The appropriate generate_testdata.py command for this is:
    python3 tests/generate_testdata.py decoupled_diffusion
    """
    cfg = parse_config(scenario_config_text("decoupled_diffusion"))
    grid = cfg.build_grid()
    traj = run(
        grid,
        cfg.material,
        cfg.initial_state(grid),
        cfg.solver,
        override_gate=cfg.override_gate,
    )
    assert cfg.solver.linear_solver == LinearSolver.DIRECT
    path = write_timeseries(traj, tmp_path / "ts.csv")
    expected = list(csv.reader(REFERENCE_TIMESERIES.read_text().splitlines()))
    actual = list(csv.reader(path.read_text().splitlines()))
    assert actual[0] == expected[0]
    assert len(actual) == len(expected)
    for a, e in zip(actual[1:], expected[1:]):
        assert [float(v) for v in a] == pytest.approx(
            [float(v) for v in e], rel=1e-9, abs=1e-14
        )
