"""
Named analytic fields sampled on grid nodes.

Sampling at the nodes is the projection of continuum data onto the discrete
space.  The ``eigenmode`` profile is a discrete Dirichlet eigenvector of the
compact Laplacian, so it plays the part of one basis function of a Galerkin
construction: ``vec_laplacian(eigenmode) == -discrete_eigenvalue * eigenmode``
at interior nodes.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from phasonsim import Profile
from .grid import Grid

LOGGER = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


@dataclass(frozen=True)
class ProfileSpec:
    """
    ``amplitude * direction * shape(x)``, where the shape depends on ``name``:

    * zero: 0
    * constant: 1
    * linear: x[axis]
    * sine_bump: product of sin(π x_a / L_a)
    * eigenmode: product of sin(k_a π x_a / L_a)
    * gaussian: exp(−|x − center|² / (2 width²))
    """

    name: Profile = Profile.ZERO
    amplitude: float = 1.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    mode: tuple[int, ...] = (1, 1, 1)
    axis: int = 0
    center: tuple[float, ...] | None = None
    width: float | None = None

    def __post_init__(self) -> None:
        if len(self.direction) != 3:
            raise ValueError(f"direction needs 3 entries, not {self.direction}")
        if any(int(k) < 1 for k in self.mode):
            raise ValueError(f"eigenmode indices must be >= 1, not {self.mode}")
        if self.width is not None and not self.width > 0:
            raise ValueError(f"width must be > 0, not {self.width}")


def _shape(grid: Grid, spec: ProfileSpec) -> Array:
    coords = grid.coordinates()
    extent = grid.extent
    match spec.name:
        case Profile.ZERO:
            return np.zeros(grid.node_shape)
        case Profile.CONSTANT:
            return np.ones(grid.node_shape)
        case Profile.LINEAR:
            if not 0 <= spec.axis < grid.dim:
                raise ValueError(
                    f"axis {spec.axis} does not exist on a {grid.dim}D grid"
                )
            return coords[spec.axis].copy()
        case Profile.SINE_BUMP | Profile.EIGENMODE:
            ks = (1,) * grid.dim if spec.name == Profile.SINE_BUMP else spec.mode
            if len(ks) < grid.dim:
                raise ValueError(f"eigenmode needs {grid.dim} indices, not {ks}")
            out = np.ones(grid.node_shape)
            for a in range(grid.dim):
                if ks[a] > grid.n[a]:
                    raise ValueError(
                        f"mode index {ks[a]} exceeds {grid.n[a]} "
                        f"interior nodes on axis {a}"
                    )
                out *= np.sin(ks[a] * np.pi * coords[a] / extent[a])
            return out
        case Profile.GAUSSIAN:
            center = spec.center or tuple(0.5 * e for e in extent)
            width = spec.width or 0.1 * min(extent)
            r2 = sum((coords[a] - center[a]) ** 2 for a in range(grid.dim))
            return np.exp(-r2 / (2.0 * width**2))
    raise ValueError(f"unknown profile {spec.name}")


def sample(grid: Grid, spec: ProfileSpec) -> Array:
    """Profile values at every node, shape ``(3, *node_shape)``."""
    direction = np.asarray(spec.direction, dtype=float).reshape((3,) + (1,) * grid.dim)
    return spec.amplitude * direction * _shape(grid, spec)[np.newaxis]


def discrete_eigenvalue(grid: Grid, mode: tuple[int, ...]) -> float:
    """λ_h with −Δ_h v = λ_h v for the Dirichlet eigenvector of index ``mode``."""
    return float(
        sum(
            4.0 / grid.h[a] ** 2
            * np.sin(mode[a] * np.pi * grid.h[a] / (2.0 * grid.extent[a])) ** 2
            for a in range(grid.dim)
        )
    )
