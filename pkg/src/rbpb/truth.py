"""High-fidelity ("truth") solver: Newton iteration on the Taylor-linearized PB equation."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .discretization import as_param, assemble_iteration
from .exceptions import NoConvergence
from .linalg import solve_banded

__all__ = ["TruthSolution", "solve_truth", "TRUTH_TOL"]

log = logging.getLogger(__name__)

TRUTH_TOL = 1e-11


@dataclass
class TruthSolution:
    phi: np.ndarray = field(repr=False)
    iterations: int
    final_delta: float
    deltas: list = field(default_factory=list, repr=False)


def solve_truth(problem, mu, phi0=None, tol=TRUTH_TOL, max_iter=500):
    """Iterate ``phi_{m+1} = A(phi_m)^{-1} b(phi_m)`` until ``|phi_{m+1} - phi_m|_inf <= tol``.

    The default start is ``V * x``, which satisfies the Dirichlet data.  Any
    finite ``phi0`` gives the same fixed point; a close one (e.g. an RB
    approximation) just saves iterations.

    Raises
    ------
    NoConvergence
        After ``max_iter`` linear solves.
    Overflow
        If an iterate leaves the range where ``cosh`` is finite.
    """
    mu = as_param(mu)
    phi = problem.initial_guess(mu) if phi0 is None else np.array(phi0, dtype=float, copy=True)
    if phi.shape != (problem.n_free,):
        raise ValueError(f"initial guess must have length {problem.n_free}")
    delta = np.inf
    history = []
    for it in range(1, max_iter + 1):
        A, b = assemble_iteration(problem, mu, phi)
        phi_new = solve_banded(A, b)
        delta = float(np.max(np.abs(phi_new - phi)))
        phi = phi_new
        history.append(delta)
        log.debug("truth D=%g V=%g it=%d delta=%.3e", mu.D, mu.V, it, delta)
        if delta <= tol:
            return TruthSolution(phi, it, delta, history)
    raise NoConvergence(
        f"truth solve at D={mu.D:g}, V={mu.V:g} stalled at delta={delta:.3e}"
        f" after {max_iter} iterations",
        iterations=max_iter,
        last_delta=delta,
    )
