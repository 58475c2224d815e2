"""
Discrete vector calculus on uniform Cartesian grids with Dirichlet boundaries.

Layout: along each axis there are ``n + 2`` nodes; index 0 and ``n + 1`` are
boundary nodes carrying Dirichlet data, ``1 .. n`` are interior.  Node ``i`` sits
at ``x = i * h``.  Fields always carry three components, even on 2D grids, where
every x₃-derivative is zero.

The operators form a summation-by-parts pair:

* ``gradient`` takes differences between neighbouring nodes, so the axis-``a``
  derivatives live on the axis-``a`` edges (centered at edge midpoints);
* ``divergence`` lives at cell centers (edge differences averaged across the cell);
* ``vec_laplacian`` is the compact Laplacian, which is exactly −gradientᵀgradient;
* ``grad_div`` is exactly −divergenceᵀ.

So for any g that vanishes on the boundary
``inner(vec_laplacian(f), g) == -inner(gradient(f), gradient(g))`` and
``inner(grad_div(f), g) == -inner(divergence(f), divergence(g))`` up to round-off,
which is what makes the discrete energy balance exact.

``curl``, ``nodal_divergence`` and ``scalar_gradient`` are nodal centered (2h)
differences, used where a pointwise nodal value is needed (the gyroscopic term).
All nodal operator outputs are zero on boundary nodes.
"""

import logging
from typing import Union

import numpy as np
import numpy.typing as npt
import scipy.sparse as sparse

from .errors import GridMismatchError

LOGGER = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]


class Grid:
    """Uniform Cartesian grid with Dirichlet data for u and ν."""

    dim: int
    n: tuple[int, ...]
    h: tuple[float, ...]
    bc_u: Array
    bc_nu: Array

    def __init__(
        self,
        dim: int,
        n: tuple[int, ...] | list[int],
        h: tuple[float, ...] | list[float],
        bc_u: Array | None = None,
        bc_nu: Array | None = None,
    ) -> None:
        """
        ``bc_u`` and ``bc_nu`` may be None (homogeneous), a 3-vector (constant on
        the boundary) or a full ``(3, *node_shape)`` array whose boundary entries
        are used; interior entries are ignored.
        """
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, not {dim}")
        if len(n) != dim or len(h) != dim:
            raise ValueError(f"n and h need {dim} entries, got {len(n)} and {len(h)}")
        if any(int(k) < 3 for k in n):
            raise ValueError(f"all n must be >= 3, not {tuple(n)}")
        if any(not float(s) > 0 for s in h):
            raise ValueError(f"all h must be > 0, not {tuple(h)}")
        self.dim = dim
        self.n = tuple(int(k) for k in n)
        self.h = tuple(float(s) for s in h)
        self.bc_u = self._boundary_array(bc_u, "bc_u")
        self.bc_nu = self._boundary_array(bc_nu, "bc_nu")

    @classmethod
    def uniform(
        cls,
        dim: int,
        n: int | tuple[int, ...],
        extent: float | tuple[float, ...] = 1.0,
        bc_u: Array | None = None,
        bc_nu: Array | None = None,
    ) -> "Grid":
        """Grid from interior node counts and physical lengths: h = extent / (n + 1)."""
        ns = (n,) * dim if isinstance(n, int) else tuple(n)
        extents = (extent,) * dim if isinstance(extent, (int, float)) else tuple(extent)
        if len(ns) != dim or len(extents) != dim:
            raise ValueError(f"n and extent need {dim} entries")
        hs = tuple(float(e) / (k + 1) for e, k in zip(extents, ns))
        return cls(dim, ns, hs, bc_u, bc_nu)

    def _boundary_array(self, data: Array | None, name: str) -> Array:
        out = np.zeros((3, *self.node_shape))
        if data is None:
            return out
        data = np.asarray(data, dtype=float)
        if data.shape == (3,):
            out[:] = data.reshape((3,) + (1,) * self.dim)
        elif data.shape == out.shape:
            out[:] = data
        else:
            raise GridMismatchError(
                f"{name} must be a 3-vector or have shape {out.shape}, not {data.shape}"
            )
        if not np.all(np.isfinite(out)):
            raise ValueError(f"{name} must be finite")
        out[(slice(None),) + self.interior_index] = 0.0
        return out

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(k + 2 for k in self.n)

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple((k + 1) * s for k, s in zip(self.n, self.h))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def interior_index(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dim

    @property
    def interior_count(self) -> int:
        return int(np.prod(self.n))

    @property
    def boundary_mask(self) -> npt.NDArray[np.bool_]:
        mask = np.ones(self.node_shape, dtype=bool)
        mask[self.interior_index] = False
        return mask

    def coordinates(self) -> tuple[Array, ...]:
        """Node coordinates, one array of shape ``node_shape`` per axis."""
        axes = [np.arange(k + 2) * s for k, s in zip(self.n, self.h)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def matches(self, other: "Grid") -> bool:
        """Same geometry (boundary data may differ)."""
        return self is other or (
            self.dim == other.dim and self.n == other.n and self.h == other.h
        )

    def with_boundary(self, bc_u: Array | None, bc_nu: Array | None) -> "Grid":
        return Grid(self.dim, self.n, self.h, bc_u, bc_nu)

    def with_zero_boundary(self) -> "Grid":
        return Grid(self.dim, self.n, self.h)

    def has_zero_boundary(self) -> bool:
        return not np.any(self.bc_u) and not np.any(self.bc_nu)

    def __repr__(self) -> str:
        return f"Grid(dim={self.dim}, n={self.n}, h={self.h})"


def _check_same_grid(a: "Field", b: "Field") -> None:
    if not a.grid.matches(b.grid):
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


class VectorField:
    """Three components per node, boundary nodes included."""

    grid: Grid
    values: Array

    def __init__(self, grid: Grid, values: Array) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (3, *grid.node_shape):
            raise GridMismatchError(
                f"vector field must have shape {(3, *grid.node_shape)}, "
                f"not {values.shape}"
            )
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((3, *grid.node_shape)))

    @property
    def interior(self) -> Array:
        return self.values[(slice(None),) + self.grid.interior_index]

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    def with_boundary(self, boundary: Array) -> "VectorField":
        """Copy with boundary nodes overwritten from ``boundary`` (full node array)."""
        out = self.values.copy()
        mask = self.grid.boundary_mask
        out[:, mask] = boundary[:, mask]
        return VectorField(self.grid, out)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.values + other.values)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same_grid(self, other)
        return VectorField(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.values)

    def __repr__(self) -> str:
        return f"VectorField({self.grid}, max={np.max(np.abs(self.values)):.3e})"


class TensorField:
    """
    Gradient of a vector field.  ``components[a]`` holds ∂f_i/∂x_a for i = 1..3
    on the axis-``a`` edges: shape ``(3, ...)`` with ``n_a + 1`` entries along
    axis ``a`` and ``n_b`` (interior) along every other axis.  On 2D grids the
    x₃-derivatives are identically zero and not stored.
    """

    grid: Grid
    components: tuple[Array, ...]

    def __init__(self, grid: Grid, components: tuple[Array, ...]) -> None:
        if len(components) != grid.dim:
            raise GridMismatchError(
                f"tensor field needs {grid.dim} derivative axes, got {len(components)}"
            )
        for a, comp in enumerate(components):
            if comp.shape != (3, *edge_shape(grid, a)):
                raise GridMismatchError(
                    f"axis {a} derivative has shape {comp.shape}, "
                    f"expected {(3, *edge_shape(grid, a))}"
                )
        self.grid = grid
        self.components = tuple(components)

    def __add__(self, other: "TensorField") -> "TensorField":
        _check_same_grid(self, other)
        return TensorField(
            self.grid, tuple(a + b for a, b in zip(self.components, other.components))
        )

    def __mul__(self, scalar: float) -> "TensorField":
        return TensorField(self.grid, tuple(c * scalar for c in self.components))

    __rmul__ = __mul__


class CellField:
    """Scalar field at cell centers: ``n_a + 1`` cells along every axis."""

    grid: Grid
    values: Array

    def __init__(self, grid: Grid, values: Array) -> None:
        shape = tuple(k + 1 for k in grid.n)
        if values.shape != shape:
            raise GridMismatchError(f"cell field must have shape {shape}")
        self.grid = grid
        self.values = values


class NodalScalar:
    """Scalar at nodes, boundary included (outputs of the nodal operators)."""

    grid: Grid
    values: Array

    def __init__(self, grid: Grid, values: Array) -> None:
        if values.shape != grid.node_shape:
            raise GridMismatchError(f"nodal scalar must have shape {grid.node_shape}")
        self.grid = grid
        self.values = values

    @property
    def interior(self) -> Array:
        return self.values[self.grid.interior_index]


Field = Union[VectorField, TensorField, CellField, NodalScalar]


def edge_shape(grid: Grid, axis: int) -> tuple[int, ...]:
    return tuple(k + 1 if b == axis else k for b, k in enumerate(grid.n))


def _along(axis: int, dim: int, sl: slice) -> tuple[slice, ...]:
    """Index selecting ``sl`` along ``axis`` of a (component, *spatial) array."""
    index = [slice(None)] * (dim + 1)
    index[axis + 1] = sl
    return tuple(index)


def _interior_except(axis: int, dim: int) -> tuple[slice, ...]:
    index = [slice(None)] + [slice(1, -1)] * dim
    index[axis + 1] = slice(None)
    return tuple(index)


def gradient(f: VectorField) -> TensorField:
    """Edge differences (f[i+1] − f[i]) / h_a along each axis."""
    grid = f.grid
    comps = []
    for a in range(grid.dim):
        diff = np.diff(f.values, axis=a + 1) / grid.h[a]
        comps.append(diff[_interior_except(a, grid.dim)])
    return TensorField(grid, tuple(comps))


def _average_except(values: Array, axis: int, dim: int, offset: int = 0) -> Array:
    """Two-point averages along every spatial axis other than ``axis``."""
    for b in range(dim):
        if b == axis:
            continue
        ax = b + offset
        lo = [slice(None)] * values.ndim
        hi = [slice(None)] * values.ndim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        values = 0.5 * (values[tuple(lo)] + values[tuple(hi)])
    return values


def divergence(f: VectorField) -> CellField:
    """Cell-centered divergence: axis-a edge differences of f_a, cell-averaged."""
    grid = f.grid
    out = np.zeros(tuple(k + 1 for k in grid.n))
    for a in range(grid.dim):
        diff = np.diff(f.values[a], axis=a) / grid.h[a]
        out += _average_except(diff, a, grid.dim)
    return CellField(grid, out)


def vec_laplacian(f: VectorField) -> VectorField:
    """Compact Laplacian of each component at interior nodes."""
    grid = f.grid
    out = np.zeros_like(f.values)
    inner_idx = (slice(None),) + grid.interior_index
    acc = np.zeros_like(f.values[inner_idx])
    for a in range(grid.dim):
        fa = f.values[_interior_except(a, grid.dim)]
        hi = fa[_along(a, grid.dim, slice(2, None))]
        mid = fa[_along(a, grid.dim, slice(1, -1))]
        lo = fa[_along(a, grid.dim, slice(None, -2))]
        acc += (hi - 2.0 * mid + lo) / grid.h[a] ** 2
    out[inner_idx] = acc
    return VectorField(grid, out)


def grad_div(f: VectorField) -> VectorField:
    """−divergenceᵀ applied to divergence(f), at interior nodes."""
    grid = f.grid
    div = divergence(f).values
    out = np.zeros_like(f.values)
    for a in range(grid.dim):
        averaged = _average_except(div, a, grid.dim)
        out[(a,) + grid.interior_index] = np.diff(averaged, axis=a) / grid.h[a]
    return VectorField(grid, out)


def _centered(values: Array, axis: int, grid: Grid) -> Array:
    """(v[i+1] − v[i−1]) / 2h along ``axis`` at interior nodes of a nodal scalar."""
    index_hi = list(grid.interior_index)
    index_lo = list(grid.interior_index)
    index_hi[axis] = slice(2, None)
    index_lo[axis] = slice(None, -2)
    return (values[tuple(index_hi)] - values[tuple(index_lo)]) / (2.0 * grid.h[axis])


def _partial(values: Array, axis: int, grid: Grid) -> Array:
    if axis >= grid.dim:
        return np.zeros(grid.n)
    return _centered(values, axis, grid)


def curl(f: VectorField) -> VectorField:
    """Nodal centered curl at interior nodes."""
    grid = f.grid
    v = f.values
    out = np.zeros_like(v)
    idx = grid.interior_index
    out[(0,) + idx] = _partial(v[2], 1, grid) - _partial(v[1], 2, grid)
    out[(1,) + idx] = _partial(v[0], 2, grid) - _partial(v[2], 0, grid)
    out[(2,) + idx] = _partial(v[1], 0, grid) - _partial(v[0], 1, grid)
    return VectorField(grid, out)


def nodal_divergence(f: VectorField) -> NodalScalar:
    """Nodal centered divergence at interior nodes."""
    grid = f.grid
    out = np.zeros(grid.node_shape)
    out[grid.interior_index] = sum(
        _partial(f.values[a], a, grid) for a in range(grid.dim)
    )
    return NodalScalar(grid, out)


def scalar_gradient(phi: NodalScalar) -> VectorField:
    """Nodal centered gradient of a scalar at interior nodes."""
    grid = phi.grid
    out = np.zeros((3, *grid.node_shape))
    for a in range(grid.dim):
        out[(a,) + grid.interior_index] = _centered(phi.values, a, grid)
    return VectorField(grid, out)


def inner(f: Field, g: Field) -> float:
    """
    Grid inner product: cell volume times the sum of pointwise products over the
    field's own point set (interior nodes, edges or cells).
    """
    if type(f) is not type(g):
        names = f"{type(f).__name__} with {type(g).__name__}"
        raise GridMismatchError(f"cannot pair {names}")
    _check_same_grid(f, g)
    vol = f.grid.cell_volume
    if isinstance(f, VectorField):
        return vol * float(np.sum(f.interior * g.interior))  # type: ignore[union-attr]
    if isinstance(f, TensorField):
        pairs = zip(f.components, g.components)  # type: ignore[union-attr]
        return vol * float(sum(np.sum(a * b) for a, b in pairs))
    if isinstance(f, NodalScalar):
        return vol * float(np.sum(f.interior * g.interior))  # type: ignore[union-attr]
    return vol * float(np.sum(f.values * g.values))  # type: ignore[union-attr]


def norm_l2(f: Field) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def norm_h1(f: VectorField) -> float:
    """‖f‖₁,₂ with ‖f‖₁,₂² = ‖f‖² + ‖∇f‖²."""
    grad = gradient(f)
    return float(np.sqrt(inner(f, f) + inner(grad, grad)))


def max_norm(f: VectorField) -> float:
    """Largest pointwise Euclidean length over interior nodes."""
    if f.interior.size == 0:
        return 0.0
    return float(np.max(np.sqrt(np.sum(f.interior**2, axis=0))))


def pointwise_cross(a: VectorField, b: VectorField) -> VectorField:
    _check_same_grid(a, b)
    return VectorField(a.grid, np.cross(a.values, b.values, axis=0))


# Sparse assembly.  Unknown vectors are component-major: the three components
# one after another, each raveled in C order over the chosen node set.


def _second_difference_1d(k: int, h: float) -> sparse.csr_matrix:
    """(k interior rows) x (k + 2 nodes) compact second difference."""
    return sparse.diags(
        [np.ones(k), -2.0 * np.ones(k), np.ones(k)], [0, 1, 2], shape=(k, k + 2)
    ).tocsr() / (h * h)


def _forward_difference_1d(k: int, h: float) -> sparse.csr_matrix:
    """(k + 1 edges) x (k + 2 nodes)."""
    return sparse.diags(
        [-np.ones(k + 1), np.ones(k + 1)], [0, 1], shape=(k + 1, k + 2)
    ).tocsr() / h


def _average_1d(k: int) -> sparse.csr_matrix:
    """(k + 1 cells) x (k + 2 nodes)."""
    return sparse.diags(
        [0.5 * np.ones(k + 1), 0.5 * np.ones(k + 1)], [0, 1], shape=(k + 1, k + 2)
    ).tocsr()


def _restrict_1d(k: int) -> sparse.csr_matrix:
    """(k interior) x (k + 2 nodes)."""
    return sparse.eye(k, k + 2, k=1, format="csr")


def _kron_all(factors: list[sparse.spmatrix]) -> sparse.csr_matrix:
    out = factors[0]
    for fac in factors[1:]:
        out = sparse.kron(out, fac, format="csr")
    return sparse.csr_matrix(out)


def scalar_laplacian_matrix(grid: Grid) -> sparse.csr_matrix:
    """Compact Laplacian: interior rows, all-node columns (scalar)."""
    total = None
    for a in range(grid.dim):
        factors = [
            _second_difference_1d(k, grid.h[b]) if b == a else _restrict_1d(k)
            for b, k in enumerate(grid.n)
        ]
        term = _kron_all(factors)
        total = term if total is None else total + term
    return sparse.csr_matrix(total)


def divergence_matrix(grid: Grid) -> sparse.csr_matrix:
    """Cell divergence: cell rows, component-major all-node columns."""
    blocks = []
    for c in range(3):
        if c < grid.dim:
            factors = [
                _forward_difference_1d(k, grid.h[b]) if b == c else _average_1d(k)
                for b, k in enumerate(grid.n)
            ]
            blocks.append(_kron_all(factors))
        else:
            cells = int(np.prod([k + 1 for k in grid.n]))
            nodes = int(np.prod(grid.node_shape))
            blocks.append(sparse.csr_matrix((cells, nodes)))
    return sparse.hstack(blocks, format="csr")


def interior_rows(grid: Grid) -> npt.NDArray[np.intp]:
    """Component-major indices of interior nodes inside an all-node vector."""
    flat = np.flatnonzero(~grid.boundary_mask.ravel())
    nodes = int(np.prod(grid.node_shape))
    return np.concatenate([flat + c * nodes for c in range(3)])


def vec_laplacian_matrix(grid: Grid) -> sparse.csr_matrix:
    """Vector Laplacian: component-major interior rows x all-node columns."""
    return sparse.block_diag([scalar_laplacian_matrix(grid)] * 3, format="csr")


def grad_div_matrix(grid: Grid) -> sparse.csr_matrix:
    """−Dᵀ D restricted to interior rows (component-major)."""
    div = divergence_matrix(grid)
    full = -(div.T @ div)
    return sparse.csr_matrix(full.tocsr()[interior_rows(grid), :])


def _centered_difference_1d(k: int, h: float) -> sparse.csr_matrix:
    """(k interior) x (k interior), zero Dirichlet values beyond the ends."""
    return sparse.csr_matrix(
        (sparse.eye(k, k, 1) - sparse.eye(k, k, -1)) / (2.0 * h)
    )


def curl_matrix(grid: Grid) -> sparse.csr_matrix:
    """``curl`` on zero-boundary fields: component-major interior rows and columns."""
    size = grid.interior_count

    def partial(axis: int) -> sparse.csr_matrix:
        if axis >= grid.dim:
            return sparse.csr_matrix((size, size))
        return _kron_all(
            [
                _centered_difference_1d(k, grid.h[b]) if b == axis else sparse.eye(k)
                for b, k in enumerate(grid.n)
            ]
        )

    d0, d1, d2 = partial(0), partial(1), partial(2)
    return sparse.bmat(
        [[None, -d2, d1], [d2, None, -d0], [-d1, d0, None]], format="csr"
    )


def cross_matrix(a: Array) -> sparse.csr_matrix:
    """The map w -> a x w for component-major vectors of equal length."""
    a0, a1, a2 = (sparse.diags(c) for c in a.reshape(3, -1))
    return sparse.bmat(
        [[None, -a2, a1], [a2, None, -a0], [-a1, a0, None]], format="csr"
    )


def pack_interior(f: VectorField) -> Array:
    """Component-major vector of interior values."""
    return np.ascontiguousarray(f.interior).reshape(-1)


def pack_all(f: VectorField) -> Array:
    return np.ascontiguousarray(f.values).reshape(-1)


def unpack_interior(
    grid: Grid, vector: Array, boundary: Array | None = None
) -> VectorField:
    """VectorField from interior values; boundary nodes from ``boundary`` (or 0)."""
    values = np.zeros((3, *grid.node_shape)) if boundary is None else boundary.copy()
    values[(slice(None),) + grid.interior_index] = vector.reshape((3, *grid.n))
    return VectorField(grid, values)
