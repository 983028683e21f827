"""Finite-difference discretization of the dimensionless PB problem.

The physical problem is ``D lap(phi) = sinh(phi) + g`` on ``[-1, 1]^dim``
with ``phi(+-1, y) = +-V`` and, in 2D, ``d_y phi = 0`` on ``y = +-1``.

Free nodes are every grid node off the Dirichlet lines ``x = +-1``; in 2D that
includes the Neumann rows ``y = +-1``, giving ``(N_x - 1)(N_y + 1)`` unknowns.
Node ``(j, k)`` (``1 <= j <= N_x - 1``, ``0 <= k <= N_y``) has index
``k * (N_x - 1) + (j - 1)`` -- x varies fastest.

Neumann rows use ghost-point reflection, which doubles the off-row coupling.
Every equation on a Neumann row is scaled by 1/2 so that ``L1`` is exactly
symmetric; the per-node factors are kept in :attr:`DiscreteProblem.row_weights`
and multiply the zeroth-order terms (``sinh``/``cosh``/``g``) as well.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidGrid, InvalidParameter, Overflow
from .linalg import BandedMatrix

__all__ = [
    "ParameterPoint",
    "Grid",
    "DiscreteProblem",
    "build_problem",
    "dirichlet_lift",
    "assemble_iteration",
    "COSH_GUARD",
]

COSH_GUARD = 700.0


@dataclass(frozen=True)
class ParameterPoint:
    """``D = (debye_length / L)**2`` and the electrode voltage ``V``."""

    D: float
    V: float

    def __post_init__(self):
        if not np.isfinite(self.D) or self.D <= 0:
            raise InvalidParameter(f"D must be positive, got {self.D}")
        if not np.isfinite(self.V) or self.V < 0:
            raise InvalidParameter(f"V must be non-negative, got {self.V}")

    @classmethod
    def from_sqrt(cls, sqrt_d, v):
        return cls(float(sqrt_d) ** 2, float(v))

    @property
    def sqrt_D(self):
        return float(np.sqrt(self.D))

    def __iter__(self):
        yield self.D
        yield self.V


def as_param(mu):
    if isinstance(mu, ParameterPoint):
        return mu
    d, v = mu
    return ParameterPoint(float(d), float(v))


@dataclass(frozen=True)
class Grid:
    dim: int
    nx: int
    ny: int = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidGrid(f"dim must be 1 or 2, got {self.dim}")
        if self.nx < 2:
            raise InvalidGrid(f"N_x must be >= 2, got {self.nx}")
        if self.dim == 2:
            if self.ny is None or self.ny < 2:
                raise InvalidGrid(f"N_y must be >= 2, got {self.ny}")
        elif self.ny is not None:
            object.__setattr__(self, "ny", None)

    @property
    def hx(self):
        return 2.0 / self.nx

    @property
    def hy(self):
        return 2.0 / self.ny if self.dim == 2 else None

    @property
    def n_free(self):
        if self.dim == 1:
            return self.nx - 1
        return (self.nx - 1) * (self.ny + 1)

    @property
    def n_rows(self):
        """Number of y-rows of free nodes (1 in 1D)."""
        return 1 if self.dim == 1 else self.ny + 1

    @property
    def x_free(self):
        return -1.0 + self.hx * np.arange(1, self.nx)

    @property
    def x_all(self):
        return -1.0 + self.hx * np.arange(self.nx + 1)

    @property
    def y_all(self):
        return -1.0 + self.hy * np.arange(self.ny + 1) if self.dim == 2 else None

    def node_coordinates(self):
        """``(x, y)`` of every free node in node order (``y`` is None in 1D)."""
        if self.dim == 1:
            return self.x_free.copy(), None
        x, y = np.meshgrid(self.x_free, self.y_all)
        return x.ravel(), y.ravel()

    def as_rows(self, phi):
        """View a free-node vector as ``(n_rows, N_x - 1)``; row ``k`` is ``y_k``."""
        return np.asarray(phi).reshape(self.n_rows, self.nx - 1)

    def fingerprint(self):
        key = f"rbpb-grid;dim={self.dim};nx={self.nx};ny={self.ny}"
        return hashlib.sha256(key.encode()).hexdigest()


@dataclass(frozen=True)
class DiscreteProblem:
    """Parameter-independent pieces of the discrete PB system.

    ``L1`` is the (row-weighted, symmetric) discrete ``-lap``; ``g`` the fixed
    charge at free nodes; ``dirichlet_mask`` the lift per unit voltage, so the
    Dirichlet contribution is ``V * dirichlet_mask``; ``row_weights`` is 1 except
    0.5 on 2D Neumann rows.
    """

    grid: Grid
    L1: BandedMatrix = field(repr=False)
    g: np.ndarray = field(repr=False)
    dirichlet_mask: np.ndarray = field(repr=False)
    row_weights: np.ndarray = field(repr=False)

    @property
    def n_free(self):
        return self.grid.n_free

    def initial_guess(self, mu):
        """Linear interpolant ``V * x`` of the Dirichlet data."""
        mu = as_param(mu)
        x, _ = self.grid.node_coordinates()
        return mu.V * x

    def residual(self, mu, phi):
        """Nonlinear residual ``D L1 phi + w (sinh phi + g) - D lift``."""
        mu = as_param(mu)
        phi = np.asarray(phi, dtype=float)
        return (
            mu.D * self.L1.matvec(phi)
            + self.row_weights * (np.sinh(phi) + self.g)
            - mu.D * dirichlet_lift(self, mu)
        )

    def full_line(self, mu, phi_line):
        """Prepend/append the Dirichlet values ``-V``/``+V`` to an x-line."""
        mu = as_param(mu)
        return np.concatenate(([-mu.V], np.asarray(phi_line, dtype=float), [mu.V]))


def _g_values(grid, g_function):
    x, y = grid.node_coordinates()
    if g_function is None:
        return np.zeros(grid.n_free)
    if grid.dim == 1:
        try:
            vals = g_function(x)
        except TypeError:
            vals = g_function(x, np.zeros_like(x))
    else:
        vals = g_function(x, y)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (grid.n_free,)).copy()
    if not np.all(np.isfinite(vals)):
        raise InvalidGrid("fixed charge g is not finite at every node")
    return vals


def build_problem(dim, nx, ny=None, g_function=None):
    """Discretize on a uniform grid with ``nx`` (and ``ny``) intervals.

    ``g_function`` is sampled pointwise at the free nodes: ``g(x)`` in 1D (a
    two-argument ``g(x, y)`` is called with ``y = 0``), ``g(x, y)`` in 2D.
    """
    grid = Grid(dim, int(nx), None if ny is None else int(ny))
    n = grid.n_free
    mx = grid.nx - 1
    cx = 1.0 / grid.hx**2

    weights = np.ones(n)
    mask = np.zeros(n)
    if grid.dim == 1:
        main = np.full(n, 2.0 * cx)
        diags = {0: main}
        if n > 1:
            diags[1] = np.full(n - 1, -cx)
            diags[-1] = np.full(n - 1, -cx)
        mask[0] -= cx
        mask[-1] += cx
    else:
        cy = 1.0 / grid.hy**2
        rows = grid.n_rows
        wrow = np.ones(rows)
        wrow[0] = wrow[-1] = 0.5
        weights = np.repeat(wrow, mx)
        main = weights * 2.0 * cx + 2.0 * cy * weights
        # x-neighbours within a row, none across row ends
        xoff = np.tile(np.r_[np.ones(mx - 1), 0.0], rows)[:-1] * -cx
        xoff *= weights[:-1]
        # y-neighbours: after halving, every coupling is exactly -cy
        yoff = np.full(n - mx, -cy)
        diags = {0: main, -mx: yoff, mx: yoff}
        if mx > 1:
            diags[1] = xoff
            diags[-1] = xoff
        mask_row = np.zeros(mx)
        mask_row[0] -= cx
        mask_row[-1] += cx
        mask = weights * np.tile(mask_row, rows)

    L1 = BandedMatrix.from_diagonals(n, diags)
    g = _g_values(grid, g_function)
    for arr in (g, mask, weights):
        arr.setflags(write=False)
    return DiscreteProblem(grid, L1, g, mask, weights)


def dirichlet_lift(problem, mu):
    """Right-hand-side contribution of the Dirichlet values ``-V``/``+V``.

    Equals ``+V / h_x**2`` times ``-1`` next to ``x = -1`` and ``+1`` next to
    ``x = +1`` (and 0 elsewhere), scaled by the row weight.  Linear in ``V``.
    """
    mu = as_param(mu)
    return mu.V * problem.dirichlet_mask


def assemble_iteration(problem, mu, phi_m):
    """Linear system for one Taylor-linearized (Newton) step.

    Returns ``(A, b)`` with ``A = D L1 + diag(w cosh phi_m)`` and
    ``b = w (cosh(phi_m) phi_m - sinh(phi_m) - g) + D lift``.
    """
    mu = as_param(mu)
    phi_m = np.asarray(phi_m, dtype=float)
    if phi_m.shape != (problem.n_free,):
        raise ValueError(f"iterate must have length {problem.n_free}")
    peak = float(np.max(np.abs(phi_m))) if phi_m.size else 0.0
    if not np.isfinite(peak) or peak > COSH_GUARD:
        raise Overflow(f"|phi| = {peak:.4g} exceeds the cosh guard {COSH_GUARD}")
    w = problem.row_weights
    ch = np.cosh(phi_m)
    A = problem.L1.scaled(mu.D).add_diagonal(w * ch)
    b = w * (ch * phi_m - np.sinh(phi_m) - problem.g) + mu.D * dirichlet_lift(problem, mu)
    return A, b
