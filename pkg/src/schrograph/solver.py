"""Dirichlet problems for Delta u - V u = 0 on sections, and exhaustion sweeps."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .calculus import VertexFunction, laplacian_values
from .errors import DomainError, ParameterError, SolverError
from .graph import GraphFamily, WeightedGraph, build_section
from .metric import PseudoMetric, intrinsic_scaling, scaled_hop_metric
from .spaces import Potential

log = logging.getLogger(__name__)

DENSE_FALLBACK_LIMIT = 2000
# CG aims this far below the declared tolerance so the solution error stays small too
CG_SAFETY = 1e-2


@dataclass(eq=False)
class DirichletProblem:
    """Delta u - V u = 0 on the interior, u = boundary data on every other vertex."""

    graph: WeightedGraph
    metric: PseudoMetric
    potential: Potential
    boundary_data: Union[float, np.ndarray, VertexFunction] = 1.0

    def __post_init__(self):
        if self.metric.graph is not self.graph:
            raise ParameterError("metric belongs to a different section")
        s = self.metric.jump
        if not self.potential.k > s:
            raise ParameterError(f"requires k > s (k={self.potential.k:g}, s={s:g})")
        if not self.graph.interior.any():
            raise DomainError("section has no interior vertex")
        data = self.boundary_data
        if isinstance(data, VertexFunction):
            data = data.values
        data = np.broadcast_to(np.asarray(data, dtype=float), (self.graph.n,)).copy()
        if not np.all(np.isfinite(data[~self.graph.interior])):
            raise ParameterError("boundary data must be finite")
        data[self.graph.interior] = 0.0
        data.flags.writeable = False
        self.boundary_data = data

    @property
    def boundary_sup(self) -> float:
        b = self.boundary_data[~self.graph.interior]
        return float(np.abs(b).max()) if b.size else 0.0

    def potential_values(self) -> np.ndarray:
        return self.potential.values(self.metric)


@dataclass(eq=False)
class Solution:
    u: VertexFunction
    residual_inf: float
    solver_iterations: int
    method: str = "cg"
    residual_bound: float = np.inf
    problem: Optional[DirichletProblem] = field(default=None, repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.u.values

    @property
    def graph(self) -> WeightedGraph:
        return self.u.graph


def system_matrix(problem: DirichletProblem):
    """Interior system ``A u_I = b``.

    ``A`` has diagonal deg(x) + V(x) mu(x) and off-diagonal -omega(x, y); it is
    the negated operator x -> mu(x) (Delta u - V u)(x) restricted to the
    interior, so it is symmetric positive definite.
    Returns ``(A, b, interior_index, boundary_index)``.
    """
    g = problem.graph
    I = g.interior_index
    B = np.flatnonzero(~g.interior)
    W = g.adjacency
    V = problem.potential_values()
    diag = g.degree[I] + V[I] * g.mu[I]
    A = (sp.diags(diag) - W[I][:, I]).tocsr()
    A.sort_indices()
    b = W[I][:, B] @ problem.boundary_data[B]
    return A, b, I, B


def spd_certificate(A: sp.spmatrix) -> float:
    """Smallest row margin ``A_ii - sum_j |A_ij|`` (off-diagonal); positive means strictly dominant."""
    A = sp.csr_matrix(A)
    d = A.diagonal()
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off))


def residual_inf(problem: DirichletProblem, u: np.ndarray) -> float:
    """max over interior of |Delta u - V u|, evaluated from the operator definition."""
    g = problem.graph
    r = laplacian_values(g, u) - problem.potential_values() * u
    return float(np.max(np.abs(r[g.interior])))


def _pcg(A, b, mu_i, target, max_iter):
    """Jacobi-preconditioned conjugate gradients.

    Stops once max |r_i / mu_i| <= target. Returns ``(x, iterations, converged)``.
    """
    dinv = 1.0 / A.diagonal()
    x = np.zeros_like(b)
    r = b.copy()
    if np.max(np.abs(r / mu_i), initial=0.0) <= target:
        return x, 0, True
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0:
            return x, it, False
        a = rz / pAp
        x += a * p
        r -= a * Ap
        if np.max(np.abs(r / mu_i)) <= target:
            # the recursive residual can drift; confirm against the true one
            r = b - A @ x
            if np.max(np.abs(r / mu_i)) <= target:
                return x, it, True
            z = dinv * r
            p = z.copy()
            rz = r @ z
            continue
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, False


def solve_dirichlet_dense(problem: DirichletProblem) -> np.ndarray:
    """Direct LAPACK solve of the interior system; the oracle for small sections."""
    A, b, I, _ = system_matrix(problem)
    u = problem.boundary_data.copy()
    u[I] = np.linalg.solve(A.toarray(), b)
    return u


def solve_dirichlet(problem: DirichletProblem, tol: float = 1e-10, max_iter: Optional[int] = None) -> Solution:
    """Solve the Dirichlet problem so that residual_inf <= tol * (1 + max |boundary data|).

    Conjugate gradients with a cap of 10 iterations per unknown; if that does
    not reach the tolerance, sections under 2000 unknowns fall back to a dense
    direct solve and larger ones raise :class:`SolverError`.
    """
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol!r}")
    g = problem.graph
    A, b, I, _ = system_matrix(problem)
    bound = tol * (1.0 + problem.boundary_sup)
    floor = 64 * np.finfo(float).eps * (1.0 + problem.boundary_sup) * float(np.max(A.diagonal() / g.mu[I]))
    target = max(CG_SAFETY * bound, floor)
    cap = max_iter if max_iter is not None else 10 * I.size
    x, iters, _ = _pcg(A, b, g.mu[I], target, cap)
    u = problem.boundary_data.copy()
    u[I] = x
    res = residual_inf(problem, u)
    method = "cg"
    if not res <= bound:
        if I.size < DENSE_FALLBACK_LIMIT:
            log.info("CG stopped at residual %.3g after %d iterations; dense fallback", res, iters)
            u = solve_dirichlet_dense(problem)
            res = residual_inf(problem, u)
            method = "dense"
        if not res <= bound:
            raise SolverError(
                f"no convergence: residual {res:.3g} exceeds {bound:.3g} after {iters} iterations",
                best_residual=res,
            )
    return Solution(VertexFunction(g, u), res, iters, method, bound, problem)


@dataclass
class SweepPoint:
    radius: int
    center_value: float
    residual: float
    iterations: int
    u_min: float = np.nan
    u_max: float = np.nan
    solution: Optional[Solution] = field(default=None, repr=False)


@dataclass
class SweepResult:
    family: GraphFamily
    scaling: float
    potential: Potential
    boundary_value: float
    points: List[SweepPoint]
    one_intrinsic_bound: float = np.nan

    @property
    def radii(self) -> List[int]:
        return [p.radius for p in self.points]

    @property
    def center_values(self) -> np.ndarray:
        return np.array([p.center_value for p in self.points])

    def relative_changes(self) -> np.ndarray:
        v = self.center_values
        if v.size < 2:
            return np.array([])
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(np.diff(v)) / np.abs(v[:-1])

    def deltas(self) -> List[Optional[float]]:
        """u_R(x0) minus the previous radius's value; None for the first radius."""
        v = self.center_values
        return [None] + [float(b - a) for a, b in zip(v, v[1:])]

    def is_monotone(self, slack: float = 1e-12) -> bool:
        """u_R(x0) nonincreasing in R, up to rounding slack."""
        return bool(np.all(np.diff(self.center_values) <= slack))

    def stabilized(self, rtol: float = 1e-4) -> bool:
        rc = self.relative_changes()
        return bool(rc.size and rc[-1] < rtol)

    @property
    def limit_estimate(self) -> float:
        return float(self.center_values[-1])

    def regime(self, beta: float = 1.0) -> dict:
        """Place the run relative to the uniqueness thresholds, on the largest section's metric."""
        from .verifier import p_threshold_duality, p_threshold_energy

        alpha, c0, k = self.potential.alpha, self.potential.c0, self.potential.k
        s = self.scaling
        out = {
            "alpha": alpha,
            "energy_regime": alpha <= 2,
            "duality_regime": alpha <= 1,
        }
        if k > s:
            out["p_min_energy"] = max(2.0, p_threshold_energy(beta, k, s, c0))
            if np.isfinite(self.one_intrinsic_bound):
                out["p_exceed_duality"] = p_threshold_duality(beta, k, s, c0, self.one_intrinsic_bound)
        return out


def exhaustion_sweep(family: GraphFamily, metric_scaling: Union[float, str], potential: Potential,
                     radii: Sequence[int], boundary_value: float = 1.0, tol: float = 1e-10,
                     keep_solutions: bool = False, workers: int = 1) -> SweepResult:
    """Solve on growing balls with constant boundary value and track u_R(x0).

    With ``V >= 0`` the centre value can only decrease as the ball grows. A
    positive limit is evidence of a nontrivial bounded solution; a limit of
    zero is what uniqueness predicts.

    ``metric_scaling="intrinsic"`` uses the intrinsic scaling of the largest
    section for every radius.
    """
    radii = [int(r) for r in radii]
    if not radii:
        raise ParameterError("radii must be nonempty")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ParameterError("radii must be strictly increasing")
    if not boundary_value > 0:
        raise ParameterError("boundary_value must be positive")
    if metric_scaling == "intrinsic":
        metric_scaling = intrinsic_scaling(build_section(family, radii[-1]))
    c = float(metric_scaling)

    def run(R):
        g = build_section(family, R)
        metric = scaled_hop_metric(g, c)
        try:
            sol = solve_dirichlet(DirichletProblem(g, metric, potential, boundary_value), tol)
        except SolverError as exc:
            raise SolverError(f"sweep failed at R={R}: {exc}", exc.best_residual) from exc
        return SweepPoint(R, float(sol.values[g.base]), sol.residual_inf, sol.solver_iterations,
                          float(sol.values.min()), float(sol.values.max()),
                          sol if keep_solutions else None)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(run, radii))
    else:
        points = [run(R) for R in radii]
    g_last = build_section(family, radii[-1])
    c0_bound = scaled_hop_metric(g_last, c).intrinsic_bound(1.0)
    return SweepResult(family, c, potential, float(boundary_value), points, c0_bound)
