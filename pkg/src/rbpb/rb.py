"""Reduced basis space: greedy offline construction, online Galerkin solves, estimator.

The reduced operator splits as ``A(mu; phi) = D * (W^T L1 W) + W^T diag(w cosh phi) W``.
The first block is parameter independent and grown one row/column per greedy
round; the second is rebuilt from the current RB iterate at O(N0 N^2) per
iteration, never touching an N0 x N0 matrix.
"""

import logging
import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discretization import COSH_GUARD, ParameterPoint, as_param
from .exceptions import (
    EmptyTrainingSet,
    FingerprintMismatch,
    FormatVersionMismatch,
    IncompatibleSpace,
    NoConvergence,
    Overflow,
    RBPBError,
    Rejected,
)
from .linalg import BandedLU, DenseLU, gram_schmidt_append, smallest_eigenvalue_spd
from .truth import TRUTH_TOL, solve_truth

__all__ = [
    "RBSpace",
    "RBSolution",
    "GreedyRound",
    "ONLINE_TOL",
    "lambda_min_l1",
    "rb_online_solve",
    "error_estimator",
    "estimate_from_residual",
    "greedy_build",
    "save_space",
    "load_space",
]

log = logging.getLogger(__name__)

ONLINE_TOL = 1e-8


@dataclass
class RBSpace:
    W: np.ndarray = field(repr=False)
    A1_hat: np.ndarray = field(repr=False)
    selected_params: list
    lambda_min_L1: float
    grid_fingerprint: str

    @property
    def N(self):
        return self.W.shape[1]

    @property
    def n_free(self):
        return self.W.shape[0]

    @classmethod
    def empty(cls, problem, lambda_min):
        n = problem.n_free
        return cls(np.zeros((n, 0)), np.zeros((0, 0)), [], float(lambda_min), problem.grid.fingerprint())

    def check_compatible(self, problem):
        if self.grid_fingerprint != problem.grid.fingerprint():
            raise IncompatibleSpace("RB space was built on a different grid")

    def truncate(self, n):
        """The nested space spanned by the first ``n`` basis vectors."""
        if not 1 <= n <= self.N:
            raise ValueError(f"cannot truncate a space of dimension {self.N} to {n}")
        return RBSpace(
            self.W[:, :n].copy(),
            self.A1_hat[:n, :n].copy(),
            list(self.selected_params[:n]),
            self.lambda_min_L1,
            self.grid_fingerprint,
        )

    def appended(self, problem, snapshot, mu, drop_tol=1e-10):
        """Orthonormalize ``snapshot`` into the basis and grow ``A1_hat`` by one row/column.

        Raises :class:`Rejected` for a (numerically) dependent snapshot.
        """
        W = gram_schmidt_append(self.W, snapshot, drop_tol=drop_tol)
        u = W[:, -1]
        col = W.T @ problem.L1.matvec(u)
        row = problem.L1.T.matvec(u) @ W
        n = W.shape[1]
        A1 = np.empty((n, n))
        A1[: n - 1, : n - 1] = self.A1_hat
        A1[:, n - 1] = col
        A1[n - 1, :] = row
        return RBSpace(W, A1, self.selected_params + [as_param(mu)], self.lambda_min_L1, self.grid_fingerprint)


@dataclass
class RBSolution:
    c: np.ndarray
    phi_hat: np.ndarray = field(repr=False)
    iterations: int
    estimator: float


@dataclass
class GreedyRound:
    """Round ``n``: the parameter added as basis vector ``n`` and ``max_train Delta_n``."""

    n: int
    mu: ParameterPoint
    delta_max: float
    argmax_index: int


def lambda_min_l1(problem, tol=1e-12):
    """Smallest eigenvalue of ``L1^T L1`` by inverse iteration (two banded solves per step)."""
    lu = BandedLU(problem.L1)
    lu_t = BandedLU(problem.L1.T)
    return smallest_eigenvalue_spd(lambda x: lu.solve(lu_t.solve(x)), problem.n_free, tol=tol)


def _cosh_checked(phi):
    peak = float(np.max(np.abs(phi))) if phi.size else 0.0
    if not np.isfinite(peak) or peak > COSH_GUARD:
        raise Overflow(f"RB iterate |phi| = {peak:.4g} exceeds the cosh guard")
    return np.cosh(phi)


def rb_online_solve(space, problem, mu, tol=ONLINE_TOL, max_iter=500, refresh_every=1):
    """Newton iteration for the Galerkin-projected PB system, started from ``c = 0``.

    Each step forms ``A = D A1_hat + W^T diag(w cosh phi_hat) W`` and
    ``W^T F(phi_hat)`` and solves the N x N system.  With ``refresh_every = k > 1``
    the reduced matrix (and its LU) is only rebuilt every ``k`` steps and the
    intermediate steps are chord updates with the same fixed point.
    """
    space.check_compatible(problem)
    if space.N < 1:
        raise IncompatibleSpace("RB space is empty")
    mu = as_param(mu)
    W = space.W
    w = problem.row_weights
    wg_hat = W.T @ (w * problem.g)
    lift_hat = mu.D * mu.V * (W.T @ problem.dirichlet_mask)
    c = np.zeros(space.N)
    phi = np.zeros(space.n_free)
    lu = None
    delta = np.inf
    for it in range(1, max_iter + 1):
        ch = _cosh_checked(phi)
        sh = np.sinh(phi)
        newton = lu is None or (it - 1) % refresh_every == 0
        if newton:
            A = mu.D * space.A1_hat + (W * (w * ch)[:, None]).T @ W
            lu = DenseLU(A)
            rhs = W.T @ (w * (ch * phi - sh)) - wg_hat + lift_hat
        else:
            resid = mu.D * (space.A1_hat @ c) + W.T @ (w * sh) + wg_hat - lift_hat
            rhs = A @ c - resid
        c_new = lu.solve(rhs)
        phi_new = W @ c_new
        delta = float(np.max(np.abs(phi_new - phi)))
        c, phi = c_new, phi_new
        if delta <= tol:
            est = error_estimator(space, problem, mu, phi)
            return RBSolution(c, phi, it, est)
    raise NoConvergence(
        f"RB online solve at D={mu.D:g}, V={mu.V:g} stalled at delta={delta:.3e}",
        iterations=max_iter,
        last_delta=delta,
    )


def error_estimator(space, problem, mu, phi_hat):
    """Residual-based estimate ``|F - L(mu; phi_hat) phi_hat|_2 / sqrt(beta_LB)``.

    The stability constant is taken from the linear part ``D L1`` only:
    ``beta_LB = D^2 * lambda_min(L1^T L1)``.
    """
    mu = as_param(mu)
    return estimate_from_residual(problem.residual(mu, phi_hat), mu.D, space.lambda_min_L1)


def estimate_from_residual(r, D, lambda_min):
    """``|r|_2 / sqrt(D**2 * lambda_min)``."""
    return float(np.linalg.norm(r) / (D * np.sqrt(lambda_min)))


def _sweep(space, problem, train, tol, threads):
    def one(mu):
        try:
            sol = rb_online_solve(space, problem, mu, tol=tol)
        except (NoConvergence, Overflow, RBPBError) as exc:
            log.debug("online solve failed at %s: %s", mu, exc)
            return np.inf, None
        return sol.estimator, sol.phi_hat

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, train))
    else:
        out = [one(mu) for mu in train]
    deltas = np.array([d for d, _ in out])
    return deltas, [p for _, p in out]


def _truth_snapshot(problem, mu, guess, truth_tol):
    if guess is not None:
        try:
            return solve_truth(problem, mu, phi0=guess, tol=truth_tol).phi
        except (NoConvergence, Overflow):
            log.info("warm-started truth solve failed at %s; retrying from V*x", mu)
    return solve_truth(problem, mu, tol=truth_tol).phi


def greedy_build(
    problem,
    train,
    n_max,
    seed_index=None,
    truth_tol=TRUTH_TOL,
    online_tol=ONLINE_TOL,
    drop_tol=1e-10,
    threads=1,
    lambda_min=None,
    callback=None,
):
    """Greedy sampling of the training set by the residual error estimator.

    The first parameter is ``train[seed_index]`` (index 0 by default).  If its
    snapshot is identically zero (e.g. ``V = 0`` with ``g = 0``) it cannot span
    anything, and the seed moves on to the next training index.  Each
    later round online-solves every training parameter, takes the estimator
    argmax (lowest index on ties), truth-solves it and appends the
    orthonormalized snapshot.  A final sweep after the last append records
    ``Delta_max`` for the full space, so round ``n`` of the log always carries
    ``max_train Delta_n``.

    Returns
    -------
    space : RBSpace
    rounds : list of GreedyRound
    """
    train = [as_param(mu) for mu in train]
    if not train:
        raise EmptyTrainingSet("training set is empty")
    if n_max < 1 or n_max > len(train):
        raise ValueError(f"N_max must be in [1, {len(train)}], got {n_max}")
    idx = 0 if seed_index is None else int(seed_index)
    if not 0 <= idx < len(train):
        raise ValueError(f"seed_index {idx} outside the training set")

    lam = lambda_min_l1(problem) if lambda_min is None else float(lambda_min)
    space = RBSpace.empty(problem, lam)
    rounds = []
    guess = None
    while True:
        mu = train[idx]
        snap = _truth_snapshot(problem, mu, guess, truth_tol)
        try:
            space = space.appended(problem, snap, mu, drop_tol=drop_tol)
        except Rejected as exc:
            if space.N == 0:
                # zero seed snapshot: advance deterministically to the next index
                idx = (idx + 1) % len(train)
                if idx == (0 if seed_index is None else int(seed_index)):
                    raise Rejected("every training snapshot is zero", 0.0) from exc
                log.info("seed %s has a zero snapshot; trying %s", mu, train[idx])
                continue
            log.warning("greedy stopped at N=%d: snapshot at %s rejected (%s)", space.N, mu, exc)
            break
        deltas, approx = _sweep(space, problem, train, online_tol, threads)
        idx = int(np.argmax(deltas))
        rounds.append(GreedyRound(space.N, mu, float(deltas[idx]), idx))
        log.info("greedy N=%d added D=%g V=%g  Delta_max=%.4e", space.N, mu.D, mu.V, deltas[idx])
        if callback is not None:
            callback(rounds[-1], space)
        if space.N >= n_max:
            break
        guess = approx[idx]
    return space, rounds


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

MAGIC = b"RBPBSPC\n"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI64sQQ")


def save_space(space, path):
    """Write ``space`` in the versioned little-endian binary format (see docs/rbspace_format.md)."""
    n0, n = space.W.shape
    fp = space.grid_fingerprint.encode("ascii")
    if len(fp) != 64:
        raise ValueError("grid fingerprint must be a 64-character hex digest")
    params = np.array([[p.D, p.V] for p in space.selected_params], dtype="<f8").reshape(n, 2)
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, fp, n0, n),
        np.asarray(space.W, dtype="<f8").tobytes(order="F"),
        np.asarray(space.A1_hat, dtype="<f8").tobytes(order="F"),
        struct.pack("<d", space.lambda_min_L1),
        params.tobytes(order="C"),
    ]
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rbspace-")
    try:
        with os.fdopen(fd, "wb") as fh:
            for part in parts:
                fh.write(part)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_space(path, problem=None):
    """Read a space written by :func:`save_space`.

    Raises
    ------
    FormatVersionMismatch
        Bad magic, unknown version, or a size that does not match the header.
    FingerprintMismatch
        ``problem`` is given and was built on a different grid.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatVersionMismatch(f"{path}: file too short for an RB space header")
    magic, version, fp, n0, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatVersionMismatch(f"{path}: not an RB space file")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    expected = _HEADER.size + 8 * (n0 * n + n * n + 1 + 2 * n)
    if len(data) != expected:
        raise FormatVersionMismatch(f"{path}: size {len(data)} bytes, header implies {expected}")
    fingerprint = fp.decode("ascii")
    if problem is not None and fingerprint != problem.grid.fingerprint():
        raise FingerprintMismatch(f"{path}: space was built on a different grid")
    off = _HEADER.size
    W = np.frombuffer(data, dtype="<f8", count=n0 * n, offset=off).reshape((n0, n), order="F")
    off += 8 * n0 * n
    A1 = np.frombuffer(data, dtype="<f8", count=n * n, offset=off).reshape((n, n), order="F")
    off += 8 * n * n
    (lam,) = struct.unpack_from("<d", data, off)
    off += 8
    params = np.frombuffer(data, dtype="<f8", count=2 * n, offset=off).reshape(n, 2)
    return RBSpace(
        np.array(W, dtype=float),
        np.array(A1, dtype=float),
        [ParameterPoint(float(d), float(v)) for d, v in params],
        float(lam),
        fingerprint,
    )
