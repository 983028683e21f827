import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from rbpb import _kernels
from rbpb.exceptions import NoConvergence, Rejected, SingularMatrix
from rbpb.linalg import (
    BandedLU,
    BandedMatrix,
    gram_schmidt_append,
    smallest_eigenvalue_spd,
    solve_banded,
    solve_dense,
)

from oracles import dense_laplacian_1d, jacobi_eigenvalues


def tridiag(n, lo, d, up):
    return BandedMatrix.from_diagonals(n, {1: lo, 0: d, -1: up})


# ---------------------------------------------------------------- BandedMatrix


def test_band_storage_invariants():
    with pytest.raises(ValueError):
        BandedMatrix(3, 1, 1, np.zeros((2, 3)))
    with pytest.raises(ValueError):
        BandedMatrix(2, 2, 0, np.zeros((3, 2)))
    a = tridiag(4, -1.0, 2.0, -1.0)
    assert a.bands.size == (a.lower_bw + a.upper_bw + 1) * a.n
    with pytest.raises(ValueError):
        a.bands[0, 0] = 5.0


def test_dense_round_trip_and_transpose():
    rng = np.random.default_rng(3)
    dense = np.triu(np.tril(rng.standard_normal((9, 9)), 3), -2)
    a = BandedMatrix.from_dense(dense, 2, 3)
    np.testing.assert_array_equal(a.to_dense(), dense)
    np.testing.assert_array_equal(a.T.to_dense(), dense.T)
    x = rng.standard_normal(9)
    np.testing.assert_allclose(a.matvec(x), dense @ x, rtol=0, atol=1e-13)


# ---------------------------------------------------------------- solve_banded


def test_solve_banded_identity():
    a = BandedMatrix(3, 0, 0, np.ones((1, 3)))
    np.testing.assert_array_equal(solve_banded(a, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_solve_banded_tridiagonal_by_hand():
    # hand elimination: rows give x1=x2/2... -> (1, 2, 3)
    x = solve_banded(tridiag(3, -1.0, 2.0, -1.0), [0.0, 0.0, 4.0])
    np.testing.assert_allclose(x, [1.0, 2.0, 3.0], rtol=0, atol=1e-14)


def test_solve_banded_zeroed_pivot_row_is_singular():
    dense = np.array([[2.0, -1.0], [-1.0, 2.0]])
    dense[0] *= 0.0
    with pytest.raises(SingularMatrix):
        solve_banded(BandedMatrix.from_dense(dense, 1, 1), [1.0, 1.0])


def test_solve_banded_needs_pivoting():
    dense = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 2.0], [0.0, 3.0, 1.0]])
    a = BandedMatrix.from_dense(dense, 1, 1)
    b = np.array([1.0, 2.0, 3.0])
    x = solve_banded(a, b)
    np.testing.assert_allclose(dense @ x, b, atol=1e-14)


@st.composite
def banded_systems(draw):
    n = draw(st.integers(1, 200))
    kl = draw(st.integers(0, min(6, n - 1)))
    ku = draw(st.integers(0, min(6, n - 1)))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    bands = rng.standard_normal((kl + ku + 1, n))
    bands[ku] += draw(st.floats(0.0, 4.0)) * (kl + ku + 1)
    return BandedMatrix(n, kl, ku, bands), rng.standard_normal(n)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(banded_systems())
def test_residual_bound_both_solvers(system):
    a, b = system
    dense = a.to_dense()
    assume(np.linalg.cond(dense) <= 1e6)
    bn = np.max(np.abs(b))
    x = solve_banded(a, b)
    assert np.max(np.abs(dense @ x - b)) <= 1e-10 * bn
    if a.n <= 60:
        x2 = solve_dense(dense, b)
        assert np.max(np.abs(dense @ x2 - b)) <= 1e-10 * bn


def test_factor_reuse_matches_fresh_solves():
    a = tridiag(50, -1.0, 3.0, -1.5)
    lu = BandedLU(a)
    rng = np.random.default_rng(0)
    for _ in range(3):
        b = rng.standard_normal(50)
        np.testing.assert_array_equal(lu.solve(b), solve_banded(a, b))


# ---------------------------------------------------------------- solve_dense


def test_solve_dense_scalar():
    np.testing.assert_allclose(solve_dense([[2.0]], [6.0]), [3.0])


def test_solve_dense_permutation():
    np.testing.assert_allclose(solve_dense([[0.0, 1.0], [1.0, 0.0]], [5.0, 7.0]), [7.0, 5.0])


def test_solve_dense_matches_banded_on_spd():
    rng = np.random.default_rng(8)
    m = rng.standard_normal((8, 8))
    spd = m @ m.T + 8 * np.eye(8)
    b = rng.standard_normal(8)
    x_dense = solve_dense(spd, b)
    x_band = solve_banded(BandedMatrix.from_dense(spd, 7, 7), b)
    np.testing.assert_allclose(x_dense, x_band, rtol=0, atol=1e-10)


def test_solve_dense_singular():
    with pytest.raises(SingularMatrix):
        solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


# ---------------------------------------------------------------- kernels


@pytest.mark.parametrize("n,kl,ku", [(1, 0, 0), (6, 2, 1), (40, 3, 5), (120, 9, 9)])
def test_numba_and_numpy_kernels_agree(n, kl, ku):
    rng = np.random.default_rng(n + kl)
    bands = rng.standard_normal((kl + ku + 1, n))
    b = rng.standard_normal(n)
    d = rng.standard_normal((min(n, 12), min(n, 12)))
    out = {}
    for name, k in _kernels.VARIANTS.items():
        lu = _kernels.pack_band_work(bands, kl, ku)
        piv = np.zeros(n, dtype=np.int64)
        assert k["band_lu_factor"](lu, kl, ku, piv, 0.0) == 0
        x = k["band_lu_solve"](lu, kl, ku, piv, b)
        y = k["band_matvec"](bands, kl, ku, x, np.arange(kl + ku + 1))
        dpiv = np.zeros(d.shape[0], dtype=np.int64)
        dd = d.copy()
        assert k["dense_lu_factor"](dd, dpiv, 0.0) == 0
        out[name] = (piv.copy(), x, y, k["dense_lu_solve"](dd, dpiv, b[: d.shape[0]]))
    (p1, x1, y1, z1), (p2, x2, y2, z2) = out["numba"], out["numpy"]
    np.testing.assert_array_equal(p1, p2)
    np.testing.assert_allclose(x1, x2, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(y1, y2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(z1, z2, rtol=1e-10, atol=1e-12)


# ---------------------------------------------------------------- eigenvalues


def test_smallest_eigenvalue_diagonal():
    a = BandedMatrix(3, 0, 0, np.array([[2.0, 3.0, 5.0]]))
    assert smallest_eigenvalue_spd(a, 3, tol=1e-12) == pytest.approx(2.0, rel=1e-10)


def test_smallest_eigenvalue_identity():
    a = BandedMatrix(4, 0, 0, np.ones((1, 4)))
    assert smallest_eigenvalue_spd(a, 4) == pytest.approx(1.0, rel=1e-12)


def test_smallest_eigenvalue_dirichlet_laplacian_closed_form():
    nx, h = 4, 0.5
    exact = (2 / h**2) * (1 - np.cos(np.pi / nx))
    dense = dense_laplacian_1d(nx)
    assert jacobi_eigenvalues(dense)[0] == pytest.approx(exact, rel=1e-12)
    lam = smallest_eigenvalue_spd(BandedMatrix.from_dense(dense, 1, 1), nx - 1, tol=1e-12)
    assert lam == pytest.approx(exact, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_smallest_eigenvalue_matches_jacobi_oracle(n, seed):
    rng = np.random.default_rng(seed)
    kl = min(3, n - 1)
    m = np.triu(np.tril(rng.standard_normal((n, n)), kl), -kl)
    spd = m + m.T
    spd += np.diag(np.sum(np.abs(spd), axis=1) + rng.uniform(0.1, 2.0, n))
    ref = jacobi_eigenvalues(spd)
    tol = 1e-10
    a = BandedMatrix.from_dense(spd, kl, kl)
    if ref[0] / ref[1] > 0.98:
        # nearly degenerate bottom pair: either an answer within tol or the cap
        try:
            lam = smallest_eigenvalue_spd(a, n, tol=tol)
        except NoConvergence:
            return
    else:
        lam = smallest_eigenvalue_spd(a, n, tol=tol)
    assert abs(lam - ref[0]) <= tol * ref[0] * (1 + 1e-6)


def test_smallest_eigenvalue_iteration_cap():
    # eigenvalues 1 and 1.5: three steps cannot reach a 1e-12 residual
    inv = np.array([1.0 / 1.5, 1.0])
    with pytest.raises(NoConvergence):
        smallest_eigenvalue_spd(lambda x: x * inv, 2, tol=1e-12, max_iter=3)
    assert smallest_eigenvalue_spd(lambda x: x * inv, 2, tol=1e-12) == pytest.approx(1.0, rel=1e-12)


def test_smallest_eigenvalue_rejects_bad_tol():
    with pytest.raises(ValueError):
        smallest_eigenvalue_spd(lambda x: x, 2, tol=0.0)


# ---------------------------------------------------------------- Gram-Schmidt

E = np.eye(3)


def test_gs_appends_orthogonal_vector():
    w = gram_schmidt_append(E[:, :1], E[:, 1])
    np.testing.assert_allclose(w, E[:, :2], atol=1e-15)


def test_gs_rejects_duplicate():
    with pytest.raises(Rejected):
        gram_schmidt_append(E[:, :1], E[:, 0])


def test_gs_projects_out_existing_component():
    w = gram_schmidt_append(E[:, :1], np.array([1.0, 1.0, 0.0]) / np.sqrt(2))
    np.testing.assert_allclose(w, E[:, :2], atol=1e-15)


def test_gs_from_empty_basis_normalizes():
    w = gram_schmidt_append(np.zeros((3, 0)), [3.0, 0.0, 4.0])
    np.testing.assert_allclose(w[:, 0], [0.6, 0.0, 0.8])


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 80), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_gs_orthonormal_after_every_append(n, k, seed):
    rng = np.random.default_rng(seed)
    # nearly parallel vectors stress the re-orthogonalization
    base = rng.standard_normal(n)
    w = np.zeros((n, 0))
    for _ in range(min(k, n)):
        v = base + 1e-6 * rng.standard_normal(n)
        try:
            w = gram_schmidt_append(w, v)
        except Rejected:
            continue
        assert np.max(np.abs(w.T @ w - np.eye(w.shape[1]))) <= 1e-12


@pytest.mark.parametrize("variant", ["numba", "numpy"])
@pytest.mark.parametrize("n,kl,ku", [(500, 1, 1), (1200, 29, 29), (300, 4, 11)])
def test_band_solve_matches_lapack(variant, n, kl, ku):
    scipy_linalg = pytest.importorskip("scipy.linalg")
    rng = np.random.default_rng(n)
    bands = rng.standard_normal((kl + ku + 1, n))
    b = rng.standard_normal(n)
    k = _kernels.VARIANTS[variant]
    lu = _kernels.pack_band_work(bands, kl, ku)
    piv = np.zeros(n, dtype=np.int64)
    assert k["band_lu_factor"](lu, kl, ku, piv, 0.0) == 0
    x = k["band_lu_solve"](lu, kl, ku, piv, b)
    ref = scipy_linalg.solve_banded((kl, ku), bands, b)
    np.testing.assert_allclose(x, ref, rtol=1e-8, atol=1e-10 * np.max(np.abs(ref)))


@pytest.mark.parametrize("flag,expect_numba", [("1", False), ("0", True)])
def test_env_flag_selects_kernels(flag, expect_numba):
    import os
    import subprocess
    import sys

    from rbpb._accel import HAVE_NUMBA

    code = (
        "from rbpb import _kernels, USE_NUMBA; from rbpb.linalg import solve_banded, BandedMatrix;"
        "import numpy as np;"
        "x = solve_banded(BandedMatrix.from_diagonals(3, {1: -1.0, 0: 2.0, -1: -1.0}), [0.0, 0.0, 4.0]);"
        "print(USE_NUMBA, _kernels.band_lu_factor is _kernels.VARIANTS['numba']['band_lu_factor'],"
        " np.allclose(x, [1, 2, 3]))"
    )
    env = dict(os.environ, RBPB_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    use, is_nb, ok = out.stdout.split()
    expected = str(expect_numba and HAVE_NUMBA)
    assert use == expected and is_nb == expected and ok == "True"
