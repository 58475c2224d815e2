"""
Run configuration: a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored.  Every key must appear in
``CONFIG_KEYS``; unknown keys, duplicate keys, missing required keys and values
that do not parse are errors carrying the line number and key.  Optional keys
take the documented defaults.  ``emit_config`` writes the canonical text of a
``RunConfig`` (every key, floats in shortest round-trip form) and
``parse_config(emit_config(cfg)) == cfg``.

Field profiles (``grid.bc_u``, ``initial.u0`` and friends) are written as a
profile name followed by ``key=value`` options, a bare vector, or a snapshot
reference::

    initial.u0 = sine_bump amplitude=0.1 direction=0,0,1
    grid.bc_u = 0.1,0,0
    initial.nu0 = file:runs/previous/snapshots/snapshot_000100.txt
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from phasonsim import (
    DEFAULT_DETERMINISTIC,
    DEFAULT_KRYLOV_MAX,
    DEFAULT_KRYLOV_TOL,
    DEFAULT_LINEAR_SOLVER,
    DEFAULT_MODEL,
    DEFAULT_OUTPUT_DIRECTORY,
    DEFAULT_OUTPUT_FORMATS,
    DEFAULT_PICARD_MAX,
    DEFAULT_PICARD_TOL,
    DEFAULT_RECORD_EVERY,
    DEFAULT_SNAPSHOT_EVERY,
    DEFAULT_STUDY,
    LinearSolver,
    Model,
    OutputFormat,
    Profile,
    Study,
)

from .dynamics import FieldState, SolverConfig, project_initial_data
from .errors import ConfigError
from .grid import Grid
from .material import MaterialParams, derive_coefficients
from .output import read_snapshot
from .profiles import ProfileSpec, sample

LOGGER = logging.getLogger(__name__)

SNAPSHOT_PREFIX = "file:"


@dataclass(frozen=True)
class SnapshotRef:
    """Take a field from a snapshot file (interior values; boundary from config)."""

    path: str


FieldSource = ProfileSpec | SnapshotRef


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: tuple[int, ...]
    extent: tuple[float, ...]
    bc_u: ProfileSpec = field(default_factory=ProfileSpec)
    bc_nu: ProfileSpec = field(default_factory=ProfileSpec)

    def build(self) -> Grid:
        geometry = Grid.uniform(self.dim, self.n, self.extent)
        return geometry.with_boundary(
            sample(geometry, self.bc_u), sample(geometry, self.bc_nu)
        )


@dataclass(frozen=True)
class StudySettings:
    viscosity_ladder: tuple[tuple[float, float], ...] = (
        (0.1, 0.1),
        (0.05, 0.05),
        (0.025, 0.025),
    )
    mms_grids: tuple[int, ...] = (7, 15, 31)
    mms_u: tuple[str, ...] = ("sin(pi*x1)*sin(pi*x2)*cos(t)", "0", "0")
    mms_nu: tuple[str, ...] = ("0", "sin(pi*x1)*sin(pi*x2)*exp(-t)", "0")
    mms_dt_per_h: float = 0.5
    perturb_nu0: ProfileSpec = ProfileSpec(
        Profile.SINE_BUMP, amplitude=0.01, direction=(0.0, 0.0, 1.0)
    )


@dataclass(frozen=True)
class OutputSettings:
    directory: str = DEFAULT_OUTPUT_DIRECTORY
    name: str = "run"
    formats: tuple[OutputFormat, ...] = DEFAULT_OUTPUT_FORMATS
    snapshot_every: int = DEFAULT_SNAPSHOT_EVERY


@dataclass(frozen=True)
class RunConfig:
    material: MaterialParams
    grid: GridSpec
    solver: SolverConfig
    u0: FieldSource = field(default_factory=ProfileSpec)
    dot_u0: FieldSource = field(default_factory=ProfileSpec)
    nu0: FieldSource = field(default_factory=ProfileSpec)
    model: Model = DEFAULT_MODEL
    study: Study = DEFAULT_STUDY
    override_gate: bool = False
    studies: StudySettings = field(default_factory=StudySettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    def build_grid(self) -> Grid:
        return self.grid.build()

    def initial_state(self, grid: Grid | None = None) -> FieldState:
        grid = grid or self.build_grid()

        def values(source: FieldSource, which: str) -> Any:
            if isinstance(source, ProfileSpec):
                return source
            try:
                snap = read_snapshot(source.path)
            except (OSError, ValueError) as e:
                raise ConfigError(f"cannot use snapshot {source.path}: {e}")
            if snap.n != grid.n:
                raise ConfigError(
                    f"snapshot {source.path} has n={snap.n}, grid has n={grid.n}"
                )
            return snap.full_values(grid, which)

        return project_initial_data(
            grid,
            values(self.u0, "u"),
            values(self.dot_u0, "ut"),
            values(self.nu0, "nu"),
        )


# Value codecs


def _float(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError(f"{text} is not finite")
    return value


def _emit_float(value: float) -> str:
    return repr(float(value))


def _int(text: str) -> int:
    return int(text, 0)


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text} is not a boolean")


def _emit_bool(value: bool) -> str:
    return "true" if value else "false"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(_int(t) for t in text.split(","))


def _emit_seq(values: Any) -> str:
    return ",".join(_emit_float(v) if isinstance(v, float) else str(v) for v in values)


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        eps, _, delta = item.partition(":")
        out.append((_float(eps), _float(delta)))
    return tuple(out)


def _emit_pairs(values: tuple[tuple[float, float], ...]) -> str:
    return ",".join(f"{_emit_float(a)}:{_emit_float(b)}" for a, b in values)


def _exprs(text: str) -> tuple[str, ...]:
    parts = tuple(t.strip() for t in text.split(";"))
    if len(parts) != 3 or not all(parts):
        raise ValueError("need three ';'-separated expressions")
    return parts


def _emit_exprs(values: tuple[str, ...]) -> str:
    return "; ".join(values)


def _formats(text: str) -> tuple[OutputFormat, ...]:
    return tuple(OutputFormat(t.strip()) for t in text.split(",") if t.strip())


def parse_profile(text: str) -> ProfileSpec:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty profile")
    head = tokens[0]
    if "," in head or _looks_numeric(head):
        if len(tokens) != 1:
            raise ValueError("a constant vector takes no options")
        vec = _floats(head)
        if len(vec) != 3:
            raise ValueError(f"a vector needs 3 entries, not {len(vec)}")
        return ProfileSpec(Profile.CONSTANT, 1.0, (vec[0], vec[1], vec[2]))
    options: dict[str, Any] = {}
    for token in tokens[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"profile option {token} is not key=value")
        match key:
            case "amplitude" | "width":
                options[key] = _float(value)
            case "direction":
                options[key] = _floats(value)
            case "center":
                options[key] = _floats(value)
            case "mode":
                options[key] = _ints(value)
            case "axis":
                options[key] = _int(value)
            case _:
                raise ValueError(f"unknown profile option {key}")
    return ProfileSpec(Profile(head), **options)


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def emit_profile(spec: ProfileSpec) -> str:
    parts = [
        str(spec.name),
        f"amplitude={_emit_float(spec.amplitude)}",
        f"direction={_emit_seq(tuple(float(d) for d in spec.direction))}",
        f"mode={_emit_seq(spec.mode)}",
        f"axis={spec.axis}",
    ]
    if spec.center is not None:
        parts.append(f"center={_emit_seq(tuple(float(c) for c in spec.center))}")
    if spec.width is not None:
        parts.append(f"width={_emit_float(spec.width)}")
    return " ".join(parts)


def _source(text: str) -> FieldSource:
    if text.startswith(SNAPSHOT_PREFIX):
        path = text[len(SNAPSHOT_PREFIX) :].strip()
        if not path:
            raise ValueError("empty snapshot path")
        return SnapshotRef(path)
    return parse_profile(text)


def _emit_source(source: FieldSource) -> str:
    if isinstance(source, SnapshotRef):
        return f"{SNAPSHOT_PREFIX}{source.path}"
    return emit_profile(source)


@dataclass(frozen=True)
class ConfigKey:
    parse: Callable[[str], Any]
    emit: Callable[[Any], str]
    required: bool = False
    default: str | None = None
    help: str = ""


_FLOAT = (_float, _emit_float)
_INT = (_int, str)
_BOOL = (_bool, _emit_bool)

# The complete key list.  Order is the canonical emit order.
CONFIG_KEYS: dict[str, ConfigKey] = {
    "material.lambda": ConfigKey(*_FLOAT, required=True, help="Lamé modulus λ"),
    "material.mu": ConfigKey(*_FLOAT, required=True, help="Lamé modulus μ"),
    "material.k0": ConfigKey(*_FLOAT, default="0.0", help="phason self-action k₀"),
    "material.k1": ConfigKey(*_FLOAT, default="0.0"),
    "material.k2": ConfigKey(*_FLOAT, default="0.0"),
    "material.k2p": ConfigKey(*_FLOAT, default="0.0", help="k₂′"),
    "material.k3": ConfigKey(*_FLOAT, default="0.0"),
    "material.k3p": ConfigKey(*_FLOAT, default="0.0", help="k₃′"),
    "material.rho": ConfigKey(*_FLOAT, required=True, help="mass density"),
    "material.varsigma": ConfigKey(*_FLOAT, required=True, help="phason drag ς"),
    "material.ell": ConfigKey(*_FLOAT, default="0.0", help="gyroscopic coupling ℓ"),
    "material.eps_visc": ConfigKey(*_FLOAT, default="0.0", help="viscosity ε on u"),
    "material.delta_visc": ConfigKey(*_FLOAT, default="0.0", help="viscosity δ on ν"),
    "grid.dim": ConfigKey(*_INT, required=True, help="2 or 3"),
    "grid.n": ConfigKey(
        _ints, _emit_seq, required=True, help="interior nodes per axis"
    ),
    "grid.extent": ConfigKey(_floats, _emit_seq, default="1.0", help="domain lengths"),
    "grid.bc_u": ConfigKey(_source, _emit_source, default="zero"),
    "grid.bc_nu": ConfigKey(_source, _emit_source, default="zero"),
    "initial.u0": ConfigKey(_source, _emit_source, default="zero"),
    "initial.dot_u0": ConfigKey(_source, _emit_source, default="zero"),
    "initial.nu0": ConfigKey(_source, _emit_source, default="zero"),
    "solver.dt": ConfigKey(*_FLOAT, required=True),
    "solver.t_end": ConfigKey(*_FLOAT, required=True),
    "solver.picard_tol": ConfigKey(*_FLOAT, default=repr(DEFAULT_PICARD_TOL)),
    "solver.picard_max": ConfigKey(*_INT, default=str(DEFAULT_PICARD_MAX)),
    "solver.krylov_tol": ConfigKey(*_FLOAT, default=repr(DEFAULT_KRYLOV_TOL)),
    "solver.krylov_max": ConfigKey(*_INT, default=str(DEFAULT_KRYLOV_MAX)),
    "solver.deterministic": ConfigKey(
        *_BOOL, default=_emit_bool(DEFAULT_DETERMINISTIC)
    ),
    "solver.record_every": ConfigKey(*_INT, default=str(DEFAULT_RECORD_EVERY)),
    "solver.linear_solver": ConfigKey(
        LinearSolver, str, default=str(DEFAULT_LINEAR_SOLVER)
    ),
    "run.model": ConfigKey(Model, str, default=str(DEFAULT_MODEL)),
    "run.study": ConfigKey(Study, str, default=str(DEFAULT_STUDY)),
    "run.override_gate": ConfigKey(*_BOOL, default="false"),
    "study.viscosity_ladder": ConfigKey(
        _pairs, _emit_pairs, default="0.1:0.1,0.05:0.05,0.025:0.025"
    ),
    "study.mms_grids": ConfigKey(_ints, _emit_seq, default="7,15,31"),
    "study.mms_u": ConfigKey(
        _exprs, _emit_exprs, default="sin(pi*x1)*sin(pi*x2)*cos(t); 0; 0"
    ),
    "study.mms_nu": ConfigKey(
        _exprs, _emit_exprs, default="0; sin(pi*x1)*sin(pi*x2)*exp(-t); 0"
    ),
    "study.mms_dt_per_h": ConfigKey(*_FLOAT, default="0.5"),
    "study.perturb_nu0": ConfigKey(
        parse_profile, emit_profile, default="sine_bump amplitude=0.01 direction=0,0,1"
    ),
    "output.directory": ConfigKey(str, str, default=DEFAULT_OUTPUT_DIRECTORY),
    "output.name": ConfigKey(str, str, default="run"),
    "output.formats": ConfigKey(
        _formats, _emit_seq, default=",".join(DEFAULT_OUTPUT_FORMATS)
    ),
    "output.snapshot_every": ConfigKey(*_INT, default=str(DEFAULT_SNAPSHOT_EVERY)),
}


def _per_axis(values: tuple, dim: int, key: str) -> tuple:
    if len(values) == 1:
        return values * dim
    if len(values) != dim:
        raise ConfigError(f"needs 1 or {dim} entries, got {len(values)}", key=key)
    return values


def parse_config(text: str) -> RunConfig:
    raw: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep:
            raise ConfigError("expected 'section.key = value'", line=number)
        if key not in CONFIG_KEYS:
            raise ConfigError("unknown key", line=number, key=key)
        if key in raw:
            raise ConfigError(
                f"duplicate key (first set on line {lines[key]})", line=number, key=key
            )
        try:
            raw[key] = CONFIG_KEYS[key].parse(value)
        except ValueError as e:
            raise ConfigError(f"bad value {value!r}: {e}", line=number, key=key)
        lines[key] = number

    for key, spec in CONFIG_KEYS.items():
        if key in raw:
            continue
        if spec.required:
            raise ConfigError("missing required key", key=key)
        raw[key] = spec.parse(spec.default or "")

    cfg = _build(raw, lines)
    coeffs = derive_coefficients(cfg.material)
    LOGGER.info(
        f"Derived coefficients: ξ={coeffs.xi:g} ξ̄={coeffs.xibar:g} ζ={coeffs.zeta:g} "
        f"γ={coeffs.gamma:g} κ={coeffs.kappa:g} κ₀={coeffs.kappa0:g}"
    )
    return cfg


def _build(raw: dict[str, Any], lines: dict[str, int]) -> RunConfig:
    def attempt(keys: list[str], make: Callable[[], Any]) -> Any:
        try:
            return make()
        except ValueError as e:
            key = next((k for k in keys if k in lines), keys[0])
            raise ConfigError(str(e), line=lines.get(key), key=key)

    material = attempt(
        [k for k in raw if k.startswith("material.")],
        lambda: MaterialParams(
            lam=raw["material.lambda"],
            mu=raw["material.mu"],
            k0=raw["material.k0"],
            k1=raw["material.k1"],
            k2=raw["material.k2"],
            k2p=raw["material.k2p"],
            k3=raw["material.k3"],
            k3p=raw["material.k3p"],
            rho=raw["material.rho"],
            varsigma=raw["material.varsigma"],
            ell=raw["material.ell"],
            eps_visc=raw["material.eps_visc"],
            delta_visc=raw["material.delta_visc"],
        ),
    )
    dim = raw["grid.dim"]
    if dim not in (2, 3):
        raise ConfigError(
            f"dim must be 2 or 3, not {dim}", lines.get("grid.dim"), "grid.dim"
        )
    for key in ("grid.bc_u", "grid.bc_nu"):
        if isinstance(raw[key], SnapshotRef):
            raise ConfigError("boundary data must be a profile", lines.get(key), key)
    grid = GridSpec(
        dim=dim,
        n=_per_axis(raw["grid.n"], dim, "grid.n"),
        extent=_per_axis(raw["grid.extent"], dim, "grid.extent"),
        bc_u=raw["grid.bc_u"],
        bc_nu=raw["grid.bc_nu"],
    )
    attempt(["grid.n", "grid.extent"], grid.build)
    solver = attempt(
        [k for k in raw if k.startswith("solver.")],
        lambda: SolverConfig(
            dt=raw["solver.dt"],
            t_end=raw["solver.t_end"],
            picard_tol=raw["solver.picard_tol"],
            picard_max=raw["solver.picard_max"],
            krylov_tol=raw["solver.krylov_tol"],
            krylov_max=raw["solver.krylov_max"],
            deterministic=raw["solver.deterministic"],
            record_every=raw["solver.record_every"],
            linear_solver=raw["solver.linear_solver"],
        ),
    )
    studies = StudySettings(
        viscosity_ladder=raw["study.viscosity_ladder"],
        mms_grids=raw["study.mms_grids"],
        mms_u=raw["study.mms_u"],
        mms_nu=raw["study.mms_nu"],
        mms_dt_per_h=raw["study.mms_dt_per_h"],
        perturb_nu0=raw["study.perturb_nu0"],
    )
    if raw["output.snapshot_every"] < 0:
        raise ConfigError(
            "must be >= 0", lines.get("output.snapshot_every"), "output.snapshot_every"
        )
    output = OutputSettings(
        directory=raw["output.directory"],
        name=raw["output.name"],
        formats=raw["output.formats"],
        snapshot_every=raw["output.snapshot_every"],
    )
    return RunConfig(
        material=material,
        grid=grid,
        solver=solver,
        u0=raw["initial.u0"],
        dot_u0=raw["initial.dot_u0"],
        nu0=raw["initial.nu0"],
        model=raw["run.model"],
        study=raw["run.study"],
        override_gate=raw["run.override_gate"],
        studies=studies,
        output=output,
    )


def _flatten(cfg: RunConfig) -> dict[str, Any]:
    m = cfg.material
    s = cfg.solver
    return {
        "material.lambda": m.lam,
        "material.mu": m.mu,
        "material.k0": m.k0,
        "material.k1": m.k1,
        "material.k2": m.k2,
        "material.k2p": m.k2p,
        "material.k3": m.k3,
        "material.k3p": m.k3p,
        "material.rho": m.rho,
        "material.varsigma": m.varsigma,
        "material.ell": m.ell,
        "material.eps_visc": m.eps_visc,
        "material.delta_visc": m.delta_visc,
        "grid.dim": cfg.grid.dim,
        "grid.n": cfg.grid.n,
        "grid.extent": tuple(float(e) for e in cfg.grid.extent),
        "grid.bc_u": cfg.grid.bc_u,
        "grid.bc_nu": cfg.grid.bc_nu,
        "initial.u0": cfg.u0,
        "initial.dot_u0": cfg.dot_u0,
        "initial.nu0": cfg.nu0,
        "solver.dt": s.dt,
        "solver.t_end": s.t_end,
        "solver.picard_tol": s.picard_tol,
        "solver.picard_max": s.picard_max,
        "solver.krylov_tol": s.krylov_tol,
        "solver.krylov_max": s.krylov_max,
        "solver.deterministic": s.deterministic,
        "solver.record_every": s.record_every,
        "solver.linear_solver": s.linear_solver,
        "run.model": cfg.model,
        "run.study": cfg.study,
        "run.override_gate": cfg.override_gate,
        "study.viscosity_ladder": cfg.studies.viscosity_ladder,
        "study.mms_grids": cfg.studies.mms_grids,
        "study.mms_u": cfg.studies.mms_u,
        "study.mms_nu": cfg.studies.mms_nu,
        "study.mms_dt_per_h": cfg.studies.mms_dt_per_h,
        "study.perturb_nu0": cfg.studies.perturb_nu0,
        "output.directory": cfg.output.directory,
        "output.name": cfg.output.name,
        "output.formats": cfg.output.formats,
        "output.snapshot_every": cfg.output.snapshot_every,
    }


def emit_config(cfg: RunConfig) -> str:
    flat = _flatten(cfg)
    lines = ["# phasonsim run configuration"]
    section = None
    for key, spec in CONFIG_KEYS.items():
        head = key.split(".", 1)[0]
        if head != section:
            if section is not None:
                lines.append("")
            section = head
        lines.append(f"{key} = {spec.emit(flat[key])}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a config file; a missing file is a ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    return parse_config(text)
