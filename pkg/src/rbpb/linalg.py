"""Dense and banded linear algebra used by the truth and reduced solvers.

Dense matrices are plain 2-D ``numpy`` arrays.  Banded matrices use the
LAPACK ``gbsv`` band layout ``bands[ku + i - j, j] = A[i, j]``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import NoConvergence, Rejected, SingularMatrix

__all__ = [
    "BandedMatrix",
    "BandedLU",
    "DenseLU",
    "solve_banded",
    "solve_dense",
    "smallest_eigenvalue_spd",
    "gram_schmidt_append",
]

PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class BandedMatrix:
    """Square band matrix with ``lower_bw`` sub- and ``upper_bw`` super-diagonals."""

    n: int
    lower_bw: int
    upper_bw: int
    bands: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0 <= self.lower_bw < self.n and 0 <= self.upper_bw < self.n):
            raise ValueError("bandwidths must lie in [0, n)")
        bands = np.ascontiguousarray(self.bands, dtype=float)
        if bands.shape != (self.lower_bw + self.upper_bw + 1, self.n):
            raise ValueError(
                f"band storage must have shape {(self.lower_bw + self.upper_bw + 1, self.n)},"
                f" got {bands.shape}"
            )
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)
        active = np.flatnonzero(np.any(bands != 0.0, axis=1))
        object.__setattr__(self, "_active_rows", active)

    @classmethod
    def from_dense(cls, a, lower_bw, upper_bw):
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("matrix must be square")
        bands = np.zeros((lower_bw + upper_bw + 1, n))
        for d in range(-upper_bw, lower_bw + 1):
            diag = np.diagonal(a, offset=-d)
            if d >= 0:
                bands[upper_bw + d, : n - d] = diag
            else:
                bands[upper_bw + d, -d:] = diag
        return cls(n, lower_bw, upper_bw, bands)

    @classmethod
    def from_diagonals(cls, n, diagonals):
        """Build from ``{offset: values}`` where ``offset = i - j`` (negative above)."""
        kl = max([0] + [d for d in diagonals if d > 0])
        ku = max([0] + [-d for d in diagonals if d < 0])
        bands = np.zeros((kl + ku + 1, n))
        for d, vals in diagonals.items():
            m = n - abs(d)
            vals = np.broadcast_to(np.asarray(vals, dtype=float), (m,))
            if d >= 0:
                bands[ku + d, :m] = vals
            else:
                bands[ku + d, -d:] = vals
        return cls(n, kl, ku, bands)

    def diagonal(self, offset=0):
        """Entries ``A[j + offset, j]``."""
        m = self.n - abs(offset)
        row = self.upper_bw + offset
        if offset >= 0:
            return self.bands[row, :m].copy()
        return self.bands[row, -offset:].copy()

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        for d in range(-self.upper_bw, self.lower_bw + 1):
            m = self.n - abs(d)
            idx = np.arange(m)
            if d >= 0:
                a[idx + d, idx] = self.bands[self.upper_bw + d, :m]
            else:
                a[idx, idx - d] = self.bands[self.upper_bw + d, -d:]
        return a

    @property
    def T(self):
        bands = np.zeros_like(self.bands)
        out_ku = self.lower_bw
        for d in range(-self.upper_bw, self.lower_bw + 1):
            # A^T has diagonal -d equal to A's diagonal d
            m = self.n - abs(d)
            src = self.diagonal(d)
            row = out_ku - d
            if -d >= 0:
                bands[row, :m] = src
            else:
                bands[row, d:] = src
        return BandedMatrix(self.n, self.upper_bw, self.lower_bw, bands)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}")
        return _kernels.band_matvec(self.bands, self.lower_bw, self.upper_bw, x, self._active_rows)

    def __matmul__(self, x):
        x = np.asarray(x)
        if x.ndim == 2:
            return np.column_stack([self.matvec(col) for col in x.T]) if x.shape[1] else np.zeros((self.n, 0))
        return self.matvec(x)

    def add_diagonal(self, d):
        """Return ``A + diag(d)`` with the same band structure."""
        bands = self.bands.copy()
        bands[self.upper_bw] += d
        return BandedMatrix(self.n, self.lower_bw, self.upper_bw, bands)

    def scaled(self, alpha):
        return BandedMatrix(self.n, self.lower_bw, self.upper_bw, alpha * self.bands)

    def max_abs(self):
        return float(np.max(np.abs(self.bands))) if self.bands.size else 0.0


class BandedLU:
    """LU factorization with partial pivoting of a :class:`BandedMatrix`.

    Row interchanges widen the upper band of ``U`` by at most ``lower_bw``,
    which the work array reserves up front.
    """

    def __init__(self, a):
        self.n = a.n
        self.kl = a.lower_bw
        self.ku = a.upper_bw
        self.lu = _kernels.pack_band_work(a.bands, self.kl, self.ku)
        self.piv = np.zeros(self.n, dtype=np.int64)
        tiny = PIVOT_RTOL * a.max_abs()
        info = _kernels.band_lu_factor(self.lu, self.kl, self.ku, self.piv, tiny)
        if info:
            raise SingularMatrix(f"pivot {info - 1} below {tiny:.3e}")

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side must have length {self.n}")
        return _kernels.band_lu_solve(self.lu, self.kl, self.ku, self.piv, b)


def solve_banded(a, b):
    """Solve ``A x = b`` for a banded ``A`` by banded LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        If a pivot magnitude falls below ``1e-14 * max|A_ij|``.
    """
    return BandedLU(a).solve(b)


class DenseLU:
    def __init__(self, a):
        a = np.array(a, dtype=float, order="C", copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        self.n = a.shape[0]
        self.piv = np.zeros(self.n, dtype=np.int64)
        tiny = PIVOT_RTOL * (float(np.max(np.abs(a))) if a.size else 0.0)
        info = _kernels.dense_lu_factor(a, self.piv, tiny)
        if info:
            raise SingularMatrix(f"pivot {info - 1} below {tiny:.3e}")
        self.lu = a

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side must have length {self.n}")
        return _kernels.dense_lu_solve(self.lu, self.piv, b)


def solve_dense(a, b):
    """Solve a small dense system by LU with partial pivoting."""
    return DenseLU(a).solve(b)


def smallest_eigenvalue_spd(apply_inverse, n, tol=1e-10, max_iter=10000):
    """Smallest eigenvalue of an SPD operator by inverse power iteration.

    Parameters
    ----------
    apply_inverse : callable or BandedMatrix
        ``x -> A^{-1} x``.  A :class:`BandedMatrix` is factorized once and its
        LU solve is used.
    n : int
        Operator dimension.
    tol : float
        Relative accuracy of the returned eigenvalue.

    The start vector is the normalized all-ones vector, so the iteration is
    deterministic; it must not be orthogonal to the lowest eigenvector.  The
    stop test is the residual bound for ``B = A^{-1}``: with unit ``x`` and
    ``mu = x.Bx`` some eigenvalue of ``B`` lies within ``|Bx - mu x|`` of
    ``mu``, so ``|Bx - mu x| <= tol mu`` pins ``1 / mu`` to ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(apply_inverse, BandedMatrix):
        apply_inverse = BandedLU(apply_inverse).solve
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = apply_inverse(x)
        mu = float(x @ y)
        if np.linalg.norm(y - mu * x) <= tol * abs(mu):
            return 1.0 / mu
        x = y / np.linalg.norm(y)
    raise NoConvergence(
        f"inverse iteration did not converge in {max_iter} steps", iterations=max_iter
    )


def gram_schmidt_append(w, v, drop_tol=1e-10):
    """Append the normalized orthogonal remainder of ``v`` to the columns of ``w``.

    Two passes of modified Gram-Schmidt ("twice is enough").

    Raises
    ------
    Rejected
        If the remainder is shorter than ``drop_tol * ||v||``.
    """
    w = np.asarray(w, dtype=float)
    v = np.array(v, dtype=float, copy=True)
    if w.ndim != 2 or w.shape[0] != v.shape[0]:
        raise ValueError("basis rows must match the vector length")
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise Rejected("zero vector", remainder_norm=0.0)
    for _ in range(2):
        for k in range(w.shape[1]):
            v -= (w[:, k] @ v) * w[:, k]
    rnorm = np.linalg.norm(v)
    if rnorm < drop_tol * vnorm:
        raise Rejected(
            f"remainder {rnorm:.3e} below {drop_tol:.1e} * |v| = {drop_tol * vnorm:.3e}",
            remainder_norm=rnorm,
        )
    return np.column_stack([w, v / rnorm])
