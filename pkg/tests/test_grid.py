"""Tests for the grid operators and their sparse assembly"""

import numpy as np
import pytest

from phasonsim.errors import GridMismatchError
from phasonsim.grid import (
    Grid,
    NodalScalar,
    VectorField,
    cross_matrix,
    curl,
    curl_matrix,
    divergence,
    grad_div,
    grad_div_matrix,
    gradient,
    inner,
    interior_rows,
    max_norm,
    nodal_divergence,
    norm_h1,
    norm_l2,
    pack_all,
    pack_interior,
    pointwise_cross,
    scalar_gradient,
    unpack_interior,
    vec_laplacian,
    vec_laplacian_matrix,
)


def random_field(grid: Grid, seed: int, zero_boundary: bool = False) -> VectorField:
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((3, *grid.node_shape))
    if zero_boundary:
        values[:, grid.boundary_mask] = 0.0
    return VectorField(grid, values)


GRIDS = [
    Grid.uniform(2, 5),
    Grid(2, (4, 6), (0.2, 0.1)),
    Grid.uniform(3, 4, extent=(1.0, 2.0, 0.5)),
]


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid.uniform(1, 5)
    with pytest.raises(ValueError):
        Grid.uniform(2, 2)
    with pytest.raises(ValueError):
        Grid(2, (5, 5), (0.1, -0.1))
    with pytest.raises(GridMismatchError):
        Grid.uniform(2, 5, bc_u=np.zeros(2))


def test_grid_geometry():
    grid = Grid.uniform(2, 9, extent=2.0)
    assert grid.h == (0.2, 0.2)
    assert grid.node_shape == (11, 11)
    assert grid.extent == pytest.approx((2.0, 2.0))
    assert grid.interior_count == 81
    assert grid.cell_volume == pytest.approx(0.04)
    assert np.count_nonzero(~grid.boundary_mask) == 81


def test_boundary_data_only_on_boundary():
    grid = Grid.uniform(2, 3, bc_u=np.array([1.0, 2.0, 3.0]))
    assert np.all(grid.bc_u[:, grid.boundary_mask][0] == 1.0)
    assert np.all(grid.bc_u[(slice(None),) + grid.interior_index] == 0.0)
    assert not grid.has_zero_boundary()
    assert grid.with_zero_boundary().has_zero_boundary()
    assert grid.matches(grid.with_zero_boundary())


@pytest.mark.parametrize("grid", GRIDS)
def test_laplacian_summation_by_parts(grid):
    f = random_field(grid, 1)
    g = random_field(grid, 2, zero_boundary=True)
    lhs = inner(vec_laplacian(f), g)
    rhs = -inner(gradient(f), gradient(g))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("grid", GRIDS)
def test_grad_div_summation_by_parts(grid):
    f = random_field(grid, 3)
    g = random_field(grid, 4, zero_boundary=True)
    lhs = inner(grad_div(f), g)
    rhs = -inner(divergence(f), divergence(g))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("grid", GRIDS)
def test_sparse_matrices_match_operators(grid):
    f = random_field(grid, 5)
    assert np.allclose(
        vec_laplacian_matrix(grid) @ pack_all(f), pack_interior(vec_laplacian(f))
    )
    assert np.allclose(grad_div_matrix(grid) @ pack_all(f), pack_interior(grad_div(f)))


@pytest.mark.parametrize("grid", GRIDS)
def test_interior_blocks_symmetric(grid):
    rows = interior_rows(grid)
    lap = vec_laplacian_matrix(grid)[:, rows].toarray()
    gd = grad_div_matrix(grid)[:, rows].toarray()
    assert np.allclose(lap, lap.T, atol=1e-12 * np.max(np.abs(lap)))
    assert np.allclose(gd, gd.T, atol=1e-12 * np.max(np.abs(gd)))
    # −grad_div is positive semidefinite, the Laplacian negative definite
    assert np.max(np.linalg.eigvalsh(gd)) <= 1e-9
    assert np.max(np.linalg.eigvalsh(lap)) < 0.0


def test_laplacian_against_dense_stencil():
    """5x5 interior grid: compare with a loop-built five-point stencil."""
    grid = Grid.uniform(2, 5)
    n = 5
    h = grid.h[0]
    dense = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            row = i * n + j
            dense[row, row] = -4.0 / h**2
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < n and 0 <= jj < n:
                    dense[row, ii * n + jj] = 1.0 / h**2
    lap = vec_laplacian_matrix(grid)[:, interior_rows(grid)].toarray()
    block = lap[: n * n, : n * n]
    assert np.allclose(block, dense, rtol=0, atol=1e-12 * np.max(np.abs(dense)))
    assert np.allclose(lap[n * n :, : n * n], 0.0)


def test_gradient_and_laplacian_exact_on_polynomials():
    grid = Grid(2, (5, 4), (0.1, 0.25))
    x, y = grid.coordinates()
    values = np.zeros((3, *grid.node_shape))
    values[0] = 2.0 * x + 3.0 * y
    values[1] = x * x + y * y
    f = VectorField(grid, values)
    grad = gradient(f)
    assert np.allclose(grad.components[0][0], 2.0)
    assert np.allclose(grad.components[1][0], 3.0)
    lap = vec_laplacian(f)
    assert np.allclose(lap.interior[1], 4.0)
    assert np.allclose(lap.interior[0], 0.0)
    div = divergence(f)
    # div = 2 + ∂y(x² + y²) averaged over the cell = 2 + 2·y_center
    yc = 0.5 * (y[:-1, :-1] + y[1:, 1:])
    assert np.allclose(div.values, 2.0 + 2.0 * yc)


def test_curl_and_nodal_divergence_exact():
    grid = Grid.uniform(3, 4)
    x, y, z = grid.coordinates()
    rotation = VectorField(grid, np.stack([-y, x, np.zeros_like(x)]))
    c = curl(rotation)
    assert np.allclose(c.interior[2], 2.0)
    assert np.allclose(c.interior[:2], 0.0)
    radial = VectorField(grid, np.stack([x, y, z]))
    assert np.allclose(nodal_divergence(radial).interior, 3.0)


@pytest.mark.parametrize("grid", [Grid.uniform(2, 7), Grid.uniform(3, 6)])
def test_discrete_vector_identities(grid):
    """div curl = 0 and curl grad = 0 wherever the stencils stay interior."""
    deep = (slice(2, -2),) * grid.dim
    f = random_field(grid, 6)
    assert np.allclose(nodal_divergence(curl(f)).values[deep], 0.0, atol=1e-9)
    rng = np.random.default_rng(8)
    phi = NodalScalar(grid, rng.standard_normal(grid.node_shape))
    curl_grad = curl(scalar_gradient(phi)).values
    assert np.allclose(curl_grad[(slice(None),) + deep], 0.0, atol=1e-9)


def test_norms():
    grid = Grid.uniform(2, 3)
    values = np.zeros((3, *grid.node_shape))
    values[2][grid.interior_index] = 1.0
    f = VectorField(grid, values)
    assert norm_l2(f) == pytest.approx(np.sqrt(9 * grid.cell_volume))
    assert norm_h1(f) >= norm_l2(f)
    assert max_norm(f) == pytest.approx(1.0)


def test_cross_is_orthogonal():
    grid = Grid.uniform(2, 5)
    a = random_field(grid, 9)
    b = random_field(grid, 10)
    assert inner(pointwise_cross(a, b), b) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("grid", GRIDS)
def test_curl_matrix_matches_stencil(grid):
    f = random_field(grid, 12, zero_boundary=True)
    expected = pack_interior(curl(f))
    assert np.allclose(curl_matrix(grid) @ pack_interior(f), expected, atol=1e-12)


def test_cross_matrix_matches_pointwise_cross():
    grid = Grid.uniform(3, 3)
    a = random_field(grid, 13, zero_boundary=True)
    b = random_field(grid, 14, zero_boundary=True)
    expected = pack_interior(pointwise_cross(a, b))
    product = cross_matrix(pack_interior(a)) @ pack_interior(b)
    assert np.allclose(product, expected, rtol=0, atol=1e-14)


def test_pack_unpack():
    grid = Grid.uniform(2, 4, bc_u=np.array([1.0, 0.0, 0.0]))
    f = random_field(grid, 11).with_boundary(grid.bc_u)
    back = unpack_interior(grid, pack_interior(f), grid.bc_u)
    assert np.array_equal(back.values, f.values)
    with pytest.raises(GridMismatchError):
        inner(f, VectorField.zeros(Grid.uniform(2, 5)))
    with pytest.raises(GridMismatchError):
        VectorField(grid, np.zeros((3, 2, 2)))
