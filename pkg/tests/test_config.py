"""Tests for the run configuration format"""

import dataclasses

import pytest

from phasonsim import LinearSolver, Model, OutputFormat, Profile, Study
from phasonsim.config import (
    CONFIG_KEYS,
    SnapshotRef,
    emit_config,
    load_config,
    parse_config,
    parse_profile,
)
from phasonsim.dynamics import check_theorem_hypotheses
from phasonsim.errors import ConfigError
from phasonsim.profiles import ProfileSpec

MINIMAL = """\
# smallest accepted config
material.lambda = 0.0
material.mu = 1.0
material.rho = 1.0
material.varsigma = 1.0
grid.dim = 2
grid.n = 9
solver.dt = 0.01
solver.t_end = 0.5
"""

FULL = MINIMAL + """\
material.k0 = 1.0
material.k1 = 1.0
material.k2 = 0.5
material.k2p = 0.25
material.k3p = 0.2
material.ell = 1.0
grid.extent = 1.0,2.0
grid.bc_u = 0.1,0,0
initial.u0 = sine_bump amplitude=0.1 direction=1,0,0
initial.dot_u0 = eigenmode amplitude=0.2 direction=0,0,1 mode=2,1
initial.nu0 = gaussian amplitude=0.05 direction=0,1,0 center=0.5,1.0 width=0.2
solver.linear_solver = cg
solver.record_every = 5
run.model = gyro
run.study = uniqueness
study.viscosity_ladder = 0.2:0.1,0.1:0.05
output.formats = csv,png
output.name = full
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.material.mu == 1.0
    assert cfg.material.k0 == 0.0
    assert cfg.grid.n == (9, 9)
    assert cfg.grid.extent == (1.0, 1.0)
    assert cfg.solver.n_steps == 50
    assert cfg.solver.linear_solver == LinearSolver.MINRES
    assert cfg.model == Model.LINEAR
    assert cfg.study == Study.NONE
    assert not cfg.override_gate
    assert cfg.u0 == ProfileSpec()
    assert cfg.output.formats == (OutputFormat.CSV, OutputFormat.SNAPSHOT)
    assert cfg.build_grid().has_zero_boundary()


def test_full_config():
    cfg = parse_config(FULL)
    assert cfg.grid.extent == (1.0, 2.0)
    assert cfg.grid.bc_u == ProfileSpec(Profile.CONSTANT, 1.0, (0.1, 0.0, 0.0))
    assert cfg.dot_u0.mode == (2, 1)
    assert cfg.nu0.center == (0.5, 1.0)
    assert cfg.solver.linear_solver == LinearSolver.CG
    assert cfg.model == Model.GYRO
    assert cfg.studies.viscosity_ladder == ((0.2, 0.1), (0.1, 0.05))
    grid = cfg.build_grid()
    assert not grid.has_zero_boundary()
    state = cfg.initial_state(grid)
    assert state.u.values[0][grid.boundary_mask].max() == pytest.approx(0.1)


@pytest.mark.parametrize("text", [MINIMAL, FULL])
def test_round_trip(text):
    cfg = parse_config(text)
    emitted = emit_config(cfg)
    assert parse_config(emitted) == cfg
    assert emit_config(parse_config(emitted)) == emitted
    # every key is written
    assert all(f"\n{key} = " in emitted for key in CONFIG_KEYS)


def test_misspelled_key():
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + "material.muu = 2.0\n")
    assert info.value.key == "material.muu"
    assert info.value.line == 10
    assert "line 10" in str(info.value)


def test_missing_required_key():
    text = MINIMAL.replace("material.rho = 1.0\n", "")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "material.rho"
    assert info.value.line is None


@pytest.mark.parametrize(
    "line, key",
    [
        ("material.k0 = abc", "material.k0"),
        ("material.k0 = nan", "material.k0"),
        ("solver.record_every = 1.5", "solver.record_every"),
        ("solver.linear_solver = gmres", "solver.linear_solver"),
        ("run.override_gate = maybe", "run.override_gate"),
        ("initial.u0 = sine_bump amplitude", "initial.u0"),
        ("initial.u0 = swirl", "initial.u0"),
        ("grid.bc_nu = 1,2", "grid.bc_nu"),
        ("study.mms_u = sin(x1); 0", "study.mms_u"),
    ],
)
def test_bad_values(line, key):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + line + "\n")
    assert info.value.key == key
    assert info.value.line == 10


def test_structural_errors():
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + "material.mu = 2.0\n")
    assert "duplicate" in str(info.value)
    assert info.value.line == 10
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "just some words\n")
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace("grid.dim = 2", "grid.dim = 4"))
    assert info.value.key == "grid.dim"
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL + "grid.extent = 1,2,3\n")
    assert info.value.key == "grid.extent"
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace("solver.dt = 0.01", "solver.dt = -0.01"))
    assert info.value.key.startswith("solver.")
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace("material.rho = 1.0", "material.rho = 0.0"))
    assert info.value.key.startswith("material.")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "grid.bc_u = file:some/snapshot.txt\n")


def test_negative_mu_parses_but_fails_gate():
    cfg = parse_config(MINIMAL.replace("material.mu = 1.0", "material.mu = -1.0"))
    grid = cfg.build_grid()
    report = check_theorem_hypotheses(
        cfg.material, grid, cfg.initial_state(grid), cfg.model
    )
    assert not report.passed


def test_snapshot_source(tmp_path):
    cfg = parse_config(MINIMAL + f"initial.nu0 = file:{tmp_path}/none.txt\n")
    assert cfg.nu0 == SnapshotRef(f"{tmp_path}/none.txt")
    with pytest.raises(ConfigError):
        cfg.initial_state()


def test_parse_profile():
    assert parse_profile("zero") == ProfileSpec()
    assert parse_profile("linear amplitude=2 axis=1") == ProfileSpec(
        Profile.LINEAR, 2.0, axis=1
    )
    with pytest.raises(ValueError):
        parse_profile("")
    with pytest.raises(ValueError):
        parse_profile("0,1,0 amplitude=2")


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL, encoding="utf-8")
    assert load_config(path) == parse_config(MINIMAL)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    replaced = dataclasses.replace(parse_config(MINIMAL), override_gate=True)
    assert "run.override_gate = true" in emit_config(replaced)
