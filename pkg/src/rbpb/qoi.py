"""Quantities of interest: surface charge, differential capacitance, RB error metrics."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import as_param
from .exceptions import RBPBError, SweepFailure, TooFewPoints
from .rb import rb_online_solve
from .truth import TRUTH_TOL, solve_truth

__all__ = [
    "CapacitanceCurve",
    "surface_charge",
    "average_potential",
    "field_surface_charge",
    "capacitance_sweep",
    "exact_capacitance_1d",
    "exact_surface_charge_1d",
    "truth_sigma_solver",
    "rb_sigma_solver",
    "exact_sigma_solver",
    "TruthCache",
    "relative_error_E",
    "error_curve",
]


@dataclass
class CapacitanceCurve:
    """``sigma(V)`` for fixed ``D`` and the capacitances ``C_L = d sigma / dV``, ``C = C_L / 2``."""

    D: float
    V_samples: np.ndarray
    sigma: np.ndarray
    C_L: np.ndarray
    C: np.ndarray
    source: str = "truth"
    scheme: str = field(default="central; one-sided 2nd order at ends")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["V", "sigma", "C_L", "C"])
            for row in zip(self.V_samples, self.sigma, self.C_L, self.C):
                w.writerow([f"{v:.17g}" for v in row])


def surface_charge(phi_line, D, hx):
    """``D * dphi/dx`` at ``x = -1`` by the one-sided second-order stencil.

    ``phi_line`` starts at the electrode (its first entry is the Dirichlet
    value) and runs inward with spacing ``hx``.
    """
    phi_line = np.asarray(phi_line, dtype=float)
    if phi_line.shape[0] < 3:
        raise TooFewPoints("surface charge needs at least 3 points")
    p1, p2, p3 = phi_line[:3]
    return D * (4.0 * p2 - 3.0 * p1 - p3) / (2.0 * hx)


def average_potential(phi, grid):
    """Mean over ``y`` of a free-node field, one value per free x-node.

    Trapezoidal rule in ``y`` divided by the interval length 2, so a
    y-independent field averages to itself.  A 1D field is returned as is.
    """
    phi = np.asarray(phi, dtype=float)
    if grid.dim == 1:
        return phi.copy()
    rows = grid.as_rows(phi)
    wy = np.full(grid.ny + 1, grid.hy)
    wy[0] = wy[-1] = 0.5 * grid.hy
    return (wy @ rows) / 2.0


def field_surface_charge(problem, mu, phi):
    mu = as_param(mu)
    line = problem.full_line(mu, average_potential(phi, problem.grid))
    return surface_charge(line, mu.D, problem.grid.hx)


def exact_surface_charge_1d(D, V):
    """Half-space closed form ``sigma = -2 sqrt(D) sinh(-V/2)``."""
    return -2.0 * math.sqrt(D) * math.sinh(-V / 2.0)


def exact_capacitance_1d(D, V):
    """Closed-form electrode capacitance ``C_L = sqrt(D) cosh(V/2)``."""
    if D <= 0:
        raise ValueError("D must be positive")
    return math.sqrt(D) * math.cosh(V / 2.0)


def _dsigma_dv(sigma, dv):
    n = sigma.shape[0]
    d = np.empty(n)
    if n == 2:
        d[:] = (sigma[1] - sigma[0]) / dv
        return d
    d[1:-1] = (sigma[2:] - sigma[:-2]) / (2.0 * dv)
    d[0] = (-3.0 * sigma[0] + 4.0 * sigma[1] - sigma[2]) / (2.0 * dv)
    d[-1] = (3.0 * sigma[-1] - 4.0 * sigma[-2] + sigma[-3]) / (2.0 * dv)
    return d


def capacitance_sweep(solver, D, V_grid, source="truth"):
    """Sample ``sigma`` over a uniform voltage grid and difference it in ``V``.

    ``solver(D, V)`` returns the surface charge.  Central differences at
    interior voltages; one-sided second-order differences at the ends (plain
    forward difference when the grid has only two points).
    """
    V = np.asarray(V_grid, dtype=float)
    if V.ndim != 1 or V.shape[0] < 2:
        raise ValueError("voltage grid needs at least two points")
    steps = np.diff(V)
    if np.any(steps <= 0):
        raise ValueError("voltage grid must be strictly increasing")
    dv = float(steps.mean())
    if np.max(np.abs(steps - dv)) > 1e-9 * max(1.0, abs(dv)):
        raise ValueError("voltage grid must be uniform")
    sigma = np.empty_like(V)
    for i, v in enumerate(V):
        try:
            sigma[i] = solver(D, float(v))
        except RBPBError as exc:
            raise SweepFailure(f"{source} solver failed at V={v:g}: {exc}", V=float(v)) from exc
    c_l = _dsigma_dv(sigma, dv)
    return CapacitanceCurve(float(D), V, sigma, c_l, c_l / 2.0, source=source)


def truth_sigma_solver(problem, tol=TRUTH_TOL, warm_start=True):
    """``(D, V) -> sigma`` from the truth solver, optionally warm-started along a sweep."""
    state = {"phi": None, "D": None}

    def solve(D, V):
        guess = state["phi"] if warm_start and state["D"] == D else None
        sol = solve_truth(problem, (D, V), phi0=guess, tol=tol)
        state["phi"], state["D"] = sol.phi, D
        return field_surface_charge(problem, (D, V), sol.phi)

    return solve


def rb_sigma_solver(space, problem, tol=1e-8):
    def solve(D, V):
        sol = rb_online_solve(space, problem, (D, V), tol=tol)
        return field_surface_charge(problem, (D, V), sol.phi_hat)

    return solve


def exact_sigma_solver():
    return exact_surface_charge_1d


class TruthCache:
    """Truth solutions keyed by parameter; misses may be warm-started from a guess."""

    def __init__(self, problem, tol=TRUTH_TOL):
        self.problem = problem
        self.tol = tol
        self._store = {}

    def __len__(self):
        return len(self._store)

    def __contains__(self, mu):
        return as_param(mu) in self._store

    def get(self, mu, guess=None):
        mu = as_param(mu)
        phi = self._store.get(mu)
        if phi is None:
            phi = None
            if guess is not None:
                try:
                    phi = solve_truth(self.problem, mu, phi0=guess, tol=self.tol).phi
                except RBPBError:
                    phi = None
            if phi is None:
                phi = solve_truth(self.problem, mu, tol=self.tol).phi
            self._store[mu] = phi
        return phi


def error_curve(space, problem, test, n_values=None, cache=None):
    """``E(N)`` for each ``N`` in ``n_values`` (default ``1..space.N``).

    Truth solutions come from ``cache`` (created if absent); a missing one is
    warm-started from the full-space RB solution.  An RB solve that fails at
    some test point makes that ``E(N)`` infinite.
    """
    test = [as_param(mu) for mu in test]
    if not test:
        raise ValueError("test set is empty")
    if n_values is None:
        n_values = range(1, space.N + 1)
    n_values = list(n_values)
    cache = cache if cache is not None else TruthCache(problem)
    truth = {}
    for mu in test:
        guess = None
        if mu not in cache:
            try:
                guess = rb_online_solve(space, problem, mu).phi_hat
            except RBPBError:
                guess = None
        truth[mu] = cache.get(mu, guess=guess)
    denom = max(float(np.max(np.abs(phi))) for phi in truth.values())
    if denom == 0.0:
        denom = 1.0
    out = []
    for n in n_values:
        sub = space.truncate(n)
        worst = 0.0
        for mu in test:
            try:
                phi_hat = rb_online_solve(sub, problem, mu).phi_hat
            except RBPBError:
                worst = np.inf
                break
            worst = max(worst, float(np.max(np.abs(truth[mu] - phi_hat))))
        out.append(worst / denom)
    return out


def relative_error_E(space, problem, test, cache=None):
    """Max over the test set of ``|phi - phi_hat|_inf`` over ``max |phi|_inf``."""
    return error_curve(space, problem, test, [space.N], cache=cache)[0]
