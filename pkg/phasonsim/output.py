"""
Serialization of trajectories: an energy time series as CSV, plain-text field
snapshots, study tables, and the run directory that collects them.

All floats are written in shortest round-trip form (``repr``), so files
re-read bit-exactly and deterministic re-runs reproduce every byte.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import numpy.typing as npt

from phasonsim import OutputFormat

from .dynamics import FieldState, Trajectory
from .errors import GridMismatchError
from .grid import Grid, VectorField

LOGGER = logging.getLogger(__name__)

TIMESERIES_COLUMNS = (
    "step",
    "t",
    "E_total",
    "E_kinetic",
    "E_phason_potential",
    "E_grad_u",
    "E_grad_nu",
    "E_div_u",
    "E_div_nu",
    "E_cross_grad",
    "E_cross_div",
    "dissipated_step",
    "gyro_power",
    "balance_residual",
    "nu_t_maxnorm",
)

SNAPSHOT_MAGIC = "# phasonsim snapshot"
CONFIG_FILE = "config.txt"
TIMESERIES_FILE = "timeseries.csv"
SNAPSHOT_DIR = "snapshots"
IMAGE_DIR = "images"


def _fmt(value: float | int) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def timeseries_rows(traj: Trajectory) -> list[list[str]]:
    """One row for step 0 and one per recorded step."""
    e0 = traj.initial_energy
    rows = [
        [
            _fmt(0),
            _fmt(traj.initial_state.t),
            _fmt(e0.total),
            _fmt(e0.kinetic),
            _fmt(e0.phason_potential),
            _fmt(e0.grad_u),
            _fmt(e0.grad_nu),
            _fmt(e0.div_u),
            _fmt(e0.div_nu),
            _fmt(e0.cross_grad),
            _fmt(e0.cross_div),
            _fmt(0.0),
            _fmt(0.0),
            _fmt(0.0),
            _fmt(0.0),
        ]
    ]
    for step in traj.state_steps[1:]:
        rec = traj.records[step - 1]
        e = rec.energy
        rows.append(
            [
                _fmt(rec.step),
                _fmt(rec.t),
                _fmt(e.total),
                _fmt(e.kinetic),
                _fmt(e.phason_potential),
                _fmt(e.grad_u),
                _fmt(e.grad_nu),
                _fmt(e.div_u),
                _fmt(e.div_nu),
                _fmt(e.cross_grad),
                _fmt(e.cross_div),
                _fmt(e.dissipated_step),
                _fmt(e.gyro_power),
                _fmt(rec.balance_residual),
                _fmt(rec.nu_t_maxnorm),
            ]
        )
    return rows


def write_timeseries(traj: Trajectory, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TIMESERIES_COLUMNS)
        writer.writerows(timeseries_rows(traj))
    LOGGER.debug(f"Wrote {path}")
    return path


def write_table(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """CSV study table; floats in round-trip form."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_fmt(v) if isinstance(v, (int, float, np.number)) else v for v in row]
            )
    LOGGER.debug(f"Wrote {path}")
    return path


def write_snapshot(state: FieldState, path: str | Path) -> Path:
    """
    Header lines ``dim``, ``n``, ``h``, ``t``, then one row per interior node in
    lexicographic order: ``i j [k] u1 u2 u3 ut1 ut2 ut3 nu1 nu2 nu3`` with
    1-based node indices.  Boundary nodes are not written.
    """
    grid = state.grid
    path = Path(path)
    idx = grid.interior_index
    columns = np.concatenate(
        [state.u.values[(slice(None),) + idx],
         state.ut.values[(slice(None),) + idx],
         state.nu.values[(slice(None),) + idx]]
    ).reshape(9, -1)
    indices = np.indices(grid.n).reshape(grid.dim, -1) + 1
    with path.open("w", encoding="utf-8") as f:
        f.write(f"{SNAPSHOT_MAGIC}\n")
        f.write(f"dim {grid.dim}\n")
        f.write("n " + " ".join(str(k) for k in grid.n) + "\n")
        f.write("h " + " ".join(_fmt(s) for s in grid.h) + "\n")
        f.write(f"t {_fmt(state.t)}\n")
        for row in range(columns.shape[1]):
            f.write(
                " ".join(str(int(i)) for i in indices[:, row])
                + " "
                + " ".join(_fmt(v) for v in columns[:, row])
                + "\n"
            )
    LOGGER.debug(f"Wrote snapshot {path}")
    return path


@dataclass(frozen=True)
class Snapshot:
    dim: int
    n: tuple[int, ...]
    h: tuple[float, ...]
    t: float
    u: npt.NDArray[np.float64]  # (3, *n), interior only
    ut: npt.NDArray[np.float64]
    nu: npt.NDArray[np.float64]

    def full_values(self, grid: Grid, which: str) -> npt.NDArray[np.float64]:
        """One field on all nodes of ``grid``; boundary nodes are zero."""
        if grid.n != self.n:
            raise GridMismatchError(f"snapshot has n={self.n}, grid has n={grid.n}")
        out = np.zeros((3, *grid.node_shape))
        out[(slice(None),) + grid.interior_index] = getattr(self, which)
        return out

    def to_state(self, grid: Grid) -> FieldState:
        """State on ``grid`` with these interior values and the grid's boundary data."""
        if grid.n != self.n or grid.h != self.h:
            raise GridMismatchError(f"snapshot grid n={self.n} h={self.h} vs {grid}")
        u = VectorField(grid, self.full_values(grid, "u")).with_boundary(grid.bc_u)
        ut = VectorField(grid, self.full_values(grid, "ut"))
        nu = VectorField(grid, self.full_values(grid, "nu")).with_boundary(grid.bc_nu)
        return FieldState(self.t, u, ut, nu)


def read_snapshot(path: str | Path) -> Snapshot:
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path} is not a snapshot file")
    header: dict[str, list[str]] = {}
    for line in lines[1:5]:
        key, *values = line.split()
        header[key] = values
    dim = int(header["dim"][0])
    n = tuple(int(k) for k in header["n"])
    h = tuple(float(s) for s in header["h"])
    t = float(header["t"][0])
    data = np.array(
        [[float(v) for v in line.split()[dim:]] for line in lines[5:] if line.strip()]
    )
    if data.shape != (int(np.prod(n)), 9):
        raise ValueError(f"{path}: expected {int(np.prod(n))} rows of 9 values")
    fields = data.T.reshape(9, *n)
    return Snapshot(
        dim, n, h, t, fields[0:3].copy(), fields[3:6].copy(), fields[6:9].copy()
    )


def snapshot_indices(traj: Trajectory, every: int) -> list[int]:
    """Indices into ``traj.states``: first and last when ``every`` is 0."""
    count = len(traj.states)
    if every <= 0:
        return sorted({0, count - 1})
    chosen = list(range(0, count, every))
    if chosen[-1] != count - 1:
        chosen.append(count - 1)
    return chosen


def write_run_outputs(
    traj: Trajectory,
    run_dir: str | Path,
    formats: Sequence[OutputFormat],
    snapshot_every: int = 0,
    config_text: str | None = None,
) -> dict[str, list[Path]]:
    """Write the requested files into ``run_dir`` and return them by kind."""
    from .render import render_field_image

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, list[Path]] = {}
    if config_text is not None:
        config_path = run_dir / CONFIG_FILE
        config_path.write_text(config_text, encoding="utf-8")
        written["config"] = [config_path]
    if OutputFormat.CSV in formats:
        written["timeseries"] = [write_timeseries(traj, run_dir / TIMESERIES_FILE)]
    chosen = snapshot_indices(traj, snapshot_every)
    if OutputFormat.SNAPSHOT in formats:
        (run_dir / SNAPSHOT_DIR).mkdir(exist_ok=True)
        written["snapshots"] = [
            write_snapshot(
                traj.states[i],
                run_dir / SNAPSHOT_DIR / f"snapshot_{traj.state_steps[i]:06d}.txt",
            )
            for i in chosen
        ]
    if OutputFormat.PNG in formats:
        (run_dir / IMAGE_DIR).mkdir(exist_ok=True)
        images = []
        for i in chosen:
            for name in ("u", "nu"):
                images.append(
                    render_field_image(
                        traj.states[i],
                        name,
                        None,
                        run_dir / IMAGE_DIR / f"{name}_{traj.state_steps[i]:06d}.png",
                    )
                )
        written["images"] = images
    LOGGER.info(f"Wrote outputs to {run_dir}")
    return written
