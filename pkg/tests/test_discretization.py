import numpy as np
import pytest

from rbpb.discretization import (
    Grid,
    ParameterPoint,
    assemble_iteration,
    build_problem,
    dirichlet_lift,
)
from rbpb.exceptions import InvalidGrid, InvalidParameter, Overflow

from oracles import dense_laplacian_1d, dense_laplacian_2d_neumann


def test_parameter_point_validation():
    with pytest.raises(InvalidParameter):
        ParameterPoint(0.0, 1.0)
    with pytest.raises(InvalidParameter):
        ParameterPoint(0.01, -1.0)
    mu = ParameterPoint.from_sqrt(0.1, 2.0)
    assert mu.D == pytest.approx(0.01)
    assert mu.sqrt_D == pytest.approx(0.1)


@pytest.mark.parametrize("args", [(1, 1), (2, 2, 1), (3, 4), (2, 4)])
def test_invalid_grids(args):
    with pytest.raises(InvalidGrid):
        Grid(*args)


def test_l1_1d_textbook_stencil():
    p = build_problem(1, 4)
    assert p.n_free == 3
    expected = 4.0 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]], dtype=float)
    np.testing.assert_array_equal(p.L1.to_dense(), expected)


@pytest.mark.parametrize("nx", [4, 10, 37])
def test_l1_1d_matches_dense_oracle(nx):
    np.testing.assert_allclose(build_problem(1, nx).L1.to_dense(), dense_laplacian_1d(nx), rtol=1e-15)


def test_l1_1d_second_difference_exact_on_quadratic():
    p = build_problem(1, 16)
    x = p.grid.x_free
    out = p.L1.matvec(x**2)
    # -(x^2)'' = -2 in the interior; the end rows miss the boundary value 1/h^2
    corr = 1.0 / p.grid.hx**2
    np.testing.assert_allclose(out[1:-1], -2.0, rtol=0, atol=1e-10)
    assert out[0] == pytest.approx(-2.0 + corr, abs=1e-10)
    assert out[-1] == pytest.approx(-2.0 + corr, abs=1e-10)


def test_2d_free_node_count():
    assert build_problem(2, 2, 2).n_free == 3
    p = build_problem(2, 6, 4)
    assert p.n_free == 5 * 5
    assert p.L1.lower_bw == p.L1.upper_bw == 5


@pytest.mark.parametrize("nx,ny", [(2, 2), (4, 3), (5, 6)])
def test_l1_2d_is_row_scaled_ghost_point_stencil(nx, ny):
    p = build_problem(2, nx, ny)
    dense = p.L1.to_dense()
    ghost = dense_laplacian_2d_neumann(nx, ny)
    np.testing.assert_allclose(dense, p.row_weights[:, None] * ghost, rtol=1e-14, atol=1e-12)
    np.testing.assert_array_equal(dense, dense.T)
    assert np.linalg.eigvalsh(dense)[0] > 0


def test_l1_2d_annihilates_constants_away_from_x_boundary():
    p = build_problem(2, 6, 5)
    out = p.grid.as_rows(p.L1.matvec(np.ones(p.n_free)))
    scale = 1.0 / p.grid.hx**2
    assert np.all(np.abs(out[:, 1:-1]) <= 1e-12 * scale)
    assert np.all(np.abs(out[:, [0, -1]]) >= 0.25 * scale)


def test_dirichlet_lift_examples():
    p = build_problem(1, 4)
    np.testing.assert_array_equal(dirichlet_lift(p, (1.0, 0.0)), 0.0)
    np.testing.assert_allclose(dirichlet_lift(p, (1.0, 1.0)), [-4.0, 0.0, 4.0])
    np.testing.assert_allclose(dirichlet_lift(p, (0.3, 2.5)), 2 * dirichlet_lift(p, (0.3, 1.25)))


def test_assemble_iteration_examples():
    p = build_problem(1, 4)
    A, b = assemble_iteration(p, (0.7, 0.0), np.zeros(3))
    np.testing.assert_allclose(A.to_dense(), 0.7 * p.L1.to_dense() + np.eye(3))
    np.testing.assert_array_equal(b, 0.0)
    _, b = assemble_iteration(p, (1.0, 1.0), np.zeros(3))
    np.testing.assert_allclose(b, [-4.0, 0.0, 4.0])


def test_assemble_iteration_overflow_guard():
    p = build_problem(1, 4)
    with pytest.raises(Overflow):
        assemble_iteration(p, (1.0, 1.0), np.array([0.0, 710.0, 0.0]))


def test_assemble_iteration_symmetric_2d():
    p = build_problem(2, 5, 4, g_function=lambda x, y: x * y)
    rng = np.random.default_rng(0)
    A, _ = assemble_iteration(p, (0.05, 2.0), rng.uniform(-2, 2, p.n_free))
    dense = A.to_dense()
    np.testing.assert_array_equal(dense, dense.T)


def test_g_sampled_pointwise():
    p = build_problem(2, 4, 2, g_function=lambda x, y: x + 10 * y)
    x, y = p.grid.node_coordinates()
    np.testing.assert_array_equal(p.g, x + 10 * y)
    p1 = build_problem(1, 4, g_function=lambda x: x**2)
    np.testing.assert_array_equal(p1.g, p1.grid.x_free**2)


def test_fingerprint_depends_on_grid_only():
    assert Grid(1, 100).fingerprint() == Grid(1, 100).fingerprint()
    assert Grid(1, 100).fingerprint() != Grid(1, 101).fingerprint()
    assert Grid(2, 10, 10).fingerprint() != Grid(2, 10, 11).fingerprint()
    assert len(Grid(1, 10).fingerprint()) == 64
