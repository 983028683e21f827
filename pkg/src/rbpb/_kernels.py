"""Hot numeric kernels, each in a numba and a pure-numpy variant.

Band factor layout (LAPACK ``gbtrf`` convention, stored transposed so that a
matrix column is a contiguous row of the work array)::

    lu[j, kv + i - j] = A[i, j],   kv = kl + ku,   width = 2*kl + ku + 1

The top ``kl`` slots of each column hold fill-in created by row interchanges.
Kernels report singularity through an integer ``info`` (0 = ok, ``k+1`` =
pivot ``k`` too small) instead of raising, so the numba versions stay nopython.
"""

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ._accel import USE_NUMBA, njit

__all__ = [
    "band_lu_factor",
    "band_lu_solve",
    "band_matvec",
    "dense_lu_factor",
    "dense_lu_solve",
]


def pack_band_work(bands, kl, ku):
    """Copy LAPACK-style ``bands[ku + i - j, j]`` into the transposed work array."""
    n = bands.shape[1]
    width = 2 * kl + ku + 1
    lu = np.zeros((n, width))
    lu[:, kl:] = bands.T
    return lu


# --------------------------------------------------------------------------
# banded LU with partial pivoting
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True, error_model="numpy")
def _band_lu_factor_nb(lu, kl, ku, piv, tiny):
    n = lu.shape[0]
    kv = kl + ku
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        jp = 0
        best = abs(lu[j, kv])
        for k in range(1, km + 1):
            a = abs(lu[j, kv + k])
            if a > best:
                best = a
                jp = k
        piv[j] = j + jp
        if best <= tiny:
            return j + 1
        ju = max(ju, min(j + ku + jp, n - 1))
        if jp != 0:
            for c in range(j, ju + 1):
                t = lu[c, kv + j - c]
                lu[c, kv + j - c] = lu[c, kv + j + jp - c]
                lu[c, kv + j + jp - c] = t
        inv = 1.0 / lu[j, kv]
        for k in range(1, km + 1):
            lu[j, kv + k] *= inv
        for c in range(j + 1, ju + 1):
            t = lu[c, kv + j - c]
            if t != 0.0:
                base = kv + j - c
                for k in range(1, km + 1):
                    lu[c, base + k] -= lu[j, kv + k] * t
    return 0


def _band_lu_factor_np(lu, kl, ku, piv, tiny):
    n, width = lu.shape
    kv = kl + ku
    flat = lu.reshape(-1)
    item = flat.itemsize
    step = width - 1  # flat offset of A[i, c] is c*step + i + kv
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        col = lu[j, kv:kv + km + 1]
        jp = int(np.argmax(np.abs(col)))
        piv[j] = j + jp
        if abs(col[jp]) <= tiny:
            return j + 1
        ju = max(ju, min(j + ku + jp, n - 1))
        ncol = ju - j + 1
        row_j = as_strided(flat[j * step + j + kv:], shape=(ncol,), strides=(step * item,))
        if jp != 0:
            row_p = as_strided(flat[j * step + j + jp + kv:], shape=(ncol,), strides=(step * item,))
            tmp = row_j.copy()
            row_j[:] = row_p
            row_p[:] = tmp
        col = lu[j, kv:kv + km + 1]
        col[1:] /= col[0]
        if km == 0 or ncol == 1:
            continue
        block = as_strided(
            flat[(j + 1) * step + (j + 1) + kv:],
            shape=(ncol - 1, km),
            strides=(step * item, item),
        )
        block -= np.outer(row_j[1:], col[1:])
    return 0


@njit(cache=True, nogil=True)
def _band_lu_solve_nb(lu, kl, ku, piv, b):
    n = lu.shape[0]
    kv = kl + ku
    x = b.copy()
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = piv[j]
        if p != j:
            t = x[j]
            x[j] = x[p]
            x[p] = t
        xj = x[j]
        if xj != 0.0:
            for k in range(1, km + 1):
                x[j + k] -= lu[j, kv + k] * xj
    for j in range(n - 1, -1, -1):
        x[j] /= lu[j, kv]
        xj = x[j]
        if xj != 0.0:
            lo = max(0, j - kv)
            for i in range(lo, j):
                x[i] -= lu[j, kv + i - j] * xj
    return x


def _band_lu_solve_np(lu, kl, ku, piv, b):
    n = lu.shape[0]
    kv = kl + ku
    x = np.array(b, dtype=float, copy=True)
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = piv[j]
        if p != j:
            x[j], x[p] = x[p], x[j]
        if km:
            x[j + 1:j + km + 1] -= lu[j, kv + 1:kv + km + 1] * x[j]
    for j in range(n - 1, -1, -1):
        x[j] /= lu[j, kv]
        lo = max(0, j - kv)
        if lo < j:
            x[lo:j] -= lu[j, kv + lo - j:kv] * x[j]
    return x


# --------------------------------------------------------------------------
# banded matvec on LAPACK-style storage bands[ku + i - j, j] = A[i, j];
# ``rows`` lists the band rows (diagonals) that hold nonzeros
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _band_matvec_nb(bands, kl, ku, x, rows):
    n = bands.shape[1]
    y = np.zeros(n)
    for r in rows:
        d = r - ku  # diagonal A[j + d, j]
        lo = max(0, -d)
        hi = min(n, n - d)
        for j in range(lo, hi):
            y[j + d] += bands[r, j] * x[j]
    return y


def _band_matvec_np(bands, kl, ku, x, rows):
    n = bands.shape[1]
    y = np.zeros(n)
    for r in rows:
        d = r - ku
        if d >= 0:
            y[d:] += bands[r, :n - d] * x[:n - d]
        else:
            y[:n + d] += bands[r, -d:] * x[-d:]
    return y


# --------------------------------------------------------------------------
# small dense LU with partial pivoting
# --------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _dense_lu_factor_nb(a, piv, tiny):
    n = a.shape[0]
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if best <= tiny:
            return k + 1
        if p != k:
            for c in range(n):
                t = a[k, c]
                a[k, c] = a[p, c]
                a[p, c] = t
        inv = 1.0 / a[k, k]
        for i in range(k + 1, n):
            m = a[i, k] * inv
            a[i, k] = m
            if m != 0.0:
                for c in range(k + 1, n):
                    a[i, c] -= m * a[k, c]
    return 0


def _dense_lu_factor_np(a, piv, tiny):
    n = a.shape[0]
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        piv[k] = p
        if abs(a[p, k]) <= tiny:
            return k + 1
        if p != k:
            a[[k, p]] = a[[p, k]]
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return 0


@njit(cache=True, nogil=True)
def _dense_lu_solve_nb(a, piv, b):
    n = a.shape[0]
    x = b.copy()
    for k in range(n):
        p = piv[k]
        if p != k:
            t = x[k]
            x[k] = x[p]
            x[p] = t
    for i in range(n):
        s = x[i]
        for c in range(i):
            s -= a[i, c] * x[c]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for c in range(i + 1, n):
            s -= a[i, c] * x[c]
        x[i] = s / a[i, i]
    return x


def _dense_lu_solve_np(a, piv, b):
    n = a.shape[0]
    x = np.array(b, dtype=float, copy=True)
    for k in range(n):
        p = piv[k]
        if p != k:
            x[k], x[p] = x[p], x[k]
    for i in range(n):
        x[i] -= a[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


if USE_NUMBA:
    band_lu_factor = _band_lu_factor_nb
    band_lu_solve = _band_lu_solve_nb
    band_matvec = _band_matvec_nb
    dense_lu_factor = _dense_lu_factor_nb
    dense_lu_solve = _dense_lu_solve_nb
else:
    band_lu_factor = _band_lu_factor_np
    band_lu_solve = _band_lu_solve_np
    band_matvec = _band_matvec_np
    dense_lu_factor = _dense_lu_factor_np
    dense_lu_solve = _dense_lu_solve_np

VARIANTS = {
    "numba": {
        "band_lu_factor": _band_lu_factor_nb,
        "band_lu_solve": _band_lu_solve_nb,
        "band_matvec": _band_matvec_nb,
        "dense_lu_factor": _dense_lu_factor_nb,
        "dense_lu_solve": _dense_lu_solve_nb,
    },
    "numpy": {
        "band_lu_factor": _band_lu_factor_np,
        "band_lu_solve": _band_lu_solve_np,
        "band_matvec": _band_matvec_np,
        "dense_lu_factor": _dense_lu_factor_np,
        "dense_lu_solve": _dense_lu_solve_np,
    },
}
