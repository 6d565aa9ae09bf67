"""Fixed-point (Picard) outer loop around the stabilized linear solve."""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble, check_problem
from .errors import LinearSolveError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    eps_tol: float = 1e-10
    max_iters: int = 100
    linear_solver: str = "direct"
    krylov_tol: float = 1e-14
    max_krylov: int = 20000
    initial_pressure: np.ndarray = None

    def __post_init__(self):
        if not self.eps_tol > 0:
            raise ValueError("eps_tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.linear_solver not in ("direct", "iterative"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")

    @classmethod
    def from_problem(cls, problem, **overrides):
        kw = {"eps_tol": problem.eps_tol, "max_iters": problem.max_iters}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


@dataclass
class PicardReport:
    iterations_used: int = 0
    diff_norms: list = field(default_factory=list)
    converged: bool = False
    pressure_independent: bool = False


@dataclass
class SolutionField:
    velocity: np.ndarray
    pressure: np.ndarray

    @property
    def n_nodes(self):
        return len(self.pressure)


def pressure_diff_norm(p_new, p_old):
    """Euclidean norm of the difference of two nodal pressure vectors."""
    p_new = np.asarray(p_new, dtype=float)
    p_old = np.asarray(p_old, dtype=float)
    if p_new.shape != p_old.shape:
        raise ValueError(f"length mismatch: {p_new.shape} vs {p_old.shape}")
    return float(np.linalg.norm(p_new - p_old))


def solve_linear(system, config=None):
    """Solve the reduced system and return the full dof vector."""
    config = config or SolverConfig()
    A, b = system.matrix.tocsc(), system.rhs
    n = A.shape[0]
    if config.linear_solver == "direct":
        # Symmetric diagonal equilibration keeps the LU forward error well
        # below typical stopping tolerances; one refinement step polishes it.
        d = np.abs(A.diagonal())
        d = 1.0 / np.sqrt(np.where(d > 0, d, 1.0))
        D = sp.diags(d)
        try:
            lu = spla.splu((D @ A @ D).tocsc())
        except RuntimeError as exc:
            raise LinearSolveError(f"factorization of {n} dofs failed: {exc}") from exc
        x = d * lu.solve(d * b)
        x += d * lu.solve(d * (b - A @ x))
    else:
        # MINRES suits the symmetric indefinite system; the preconditioner
        # must be positive definite, hence the absolute diagonal.
        d = np.abs(A.diagonal())
        M = sp.diags(1.0 / np.where(d > 0, d, 1.0))
        x, info = spla.minres(A, b, M=M, rtol=config.krylov_tol, maxiter=config.max_krylov)
        if info != 0:
            raise LinearSolveError(f"MINRES on {n} dofs stopped with info={info}")
    if not np.all(np.isfinite(x)):
        raise LinearSolveError(f"non-finite solution for {n} dofs (singular matrix?)")
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ x - b)
    tol = 1e-10 if config.linear_solver == "direct" else max(config.krylov_tol, 1e-10)
    if bnorm > 0 and res > tol * bnorm * 1e3:
        raise LinearSolveError(f"residual {res:.3g} too large for {n} dofs (|b| = {bnorm:.3g})")
    return system.expand(x)


def run_picard(problem, config=None, callback=None):
    """Fixed-point iteration on the drag; returns ``(SolutionField, PicardReport)``.

    Each iteration freezes the drag at the previous pressure, solves the
    stabilized linear system and stops once the Euclidean norm of the
    nodal pressure change drops below ``eps_tol``.  Running out of
    iterations is reported through ``converged=False``, not raised.

    When the drag does not depend on pressure the first solve already is
    the fixed point, so the loop stops after one iteration without a
    confirming solve; ``diff_norms`` then holds the change from the guess.
    """
    config = config or SolverConfig.from_problem(problem)
    check_problem(problem)
    n = problem.mesh.n_nodes
    p_old = np.zeros(n) if config.initial_pressure is None else \
        np.asarray(config.initial_pressure, dtype=float).copy()
    if p_old.shape != (n,):
        raise ValueError(f"initial pressure needs {n} values")
    report = PicardReport(pressure_independent=problem.drag.pressure_independent)
    velocity = None
    for i in range(1, int(config.max_iters) + 1):
        system = assemble(problem, p_old)
        try:
            x = solve_linear(system, config)
        except LinearSolveError as exc:
            raise LinearSolveError(f"iteration {i}: {exc}") from exc
        velocity, p_new = system.dofmap.split(x)
        diff = pressure_diff_norm(p_new, p_old)
        report.diff_norms.append(diff)
        report.iterations_used = i
        log.debug("picard iteration %d: |dp| = %.3e", i, diff)
        if callback is not None:
            callback(i, diff)
        p_old = p_new
        if diff < config.eps_tol or report.pressure_independent:
            report.converged = True
            break
    if not report.converged:
        log.warning("fixed-point iteration did not converge in %d iterations", config.max_iters)
    return SolutionField(velocity, p_old), report
