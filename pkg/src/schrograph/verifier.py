"""Explicit constants, uniqueness thresholds, the cut-off function and numerical
certificates for every quantitative estimate behind the uniqueness results.

Every checker returns a :class:`~schrograph.report.CheckReport`. Checks certify
their hypotheses first (metric bounds, k > s, support conditions) and raise
:class:`~schrograph.errors.HypothesisError` when one fails, so that a failed
hypothesis is never mistaken for a violated inequality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .calculus import VertexFunction, laplacian_values
from .errors import HypothesisError, ParameterError
from .graph import WeightedGraph
from .metric import INTRINSIC_SLACK, PseudoMetric
from .report import DEFAULT_TOL, CheckReport, Tolerance, edge_locator, index_locator, summarize
from .solver import Solution
from .spaces import Potential, PowerWeight

ORIENTATION_NOTE = "ratio orientation zeta(y)/zeta(x) used throughout"


def _require_k_gt_s(k: float, s: float) -> None:
    if not (s >= 0 and k > s):
        raise ParameterError(f"requires k > s (k={k:g}, s={s:g})")


def c1_constant(beta: float, k: float, s: float) -> float:
    """(k / (k - s))^(beta + 1): the sharp constant in [t + k - s]^(-beta-1) <= C [t + k]^(-beta-1), t >= 0."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta!r}")
    _require_k_gt_s(k, s)
    return (k / (k - s)) ** (beta + 1)


def c2_constant(beta: float, k: float, s: float) -> float:
    """(k / (k - s))^beta, the optimal constant for the same comparison one power lower."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta!r}")
    _require_k_gt_s(k, s)
    return (k / (k - s)) ** beta


def c3_constant(beta: float, k: float, s: float) -> float:
    """k^beta / (k - s)^(beta + 1), so that [t + k - s]^(-beta-1) <= C [t + k]^(-beta)."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta!r}")
    _require_k_gt_s(k, s)
    return k ** beta / (k - s) ** (beta + 1)


def shift_ratio_profile(beta: float, k: float, s: float, t_max: float = 1e3, samples: int = 20001):
    """Sample g(t) = [t+k-s]^(-beta-1) / [t+k]^(-beta-1) on [0, t_max].

    g is decreasing, so its maximum is g(0) = c1_constant(beta, k, s).
    Returns ``(t, g(t))``.
    """
    _require_k_gt_s(k, s)
    t = np.concatenate([[0.0], np.geomspace(1e-9, t_max, samples - 1)])
    return t, ((t + k - s) / (t + k)) ** (-beta - 1)


def p_threshold_energy(beta: float, k: float, s: float, c0: float) -> float:
    """beta^2 / (2 c0) * C1^2.

    Uniqueness in l^p_{zeta_beta} for decay alpha <= 2 needs p >= max(2, this).
    """
    if not c0 > 0:
        raise ParameterError(f"c0 must be positive, got {c0!r}")
    return beta ** 2 / (2 * c0) * c1_constant(beta, k, s) ** 2


def p_threshold_duality(beta: float, k: float, s: float, c0: float, one_intrinsic_bound: float) -> float:
    """(C0 / c0) * C1 * beta, C0 being the metric's 1-intrinsic bound.

    Uniqueness for decay alpha <= 1 needs p >= 1 and p strictly greater than this.
    """
    if not c0 > 0:
        raise ParameterError(f"c0 must be positive, got {c0!r}")
    if not one_intrinsic_bound > 0:
        raise ParameterError("the 1-intrinsic bound must be positive")
    return one_intrinsic_bound / c0 * c1_constant(beta, k, s) * beta


@dataclass(frozen=True)
class Thresholds:
    energy: float
    duality: float

    @property
    def energy_p_min(self) -> float:
        """Smallest admissible p for the p >= 2 result (non-strict)."""
        return max(2.0, self.energy)

    @property
    def duality_p_floor(self) -> float:
        """p must exceed ``duality`` strictly and be at least 1."""
        return max(1.0, self.duality)

    def duality_admits(self, p: float) -> bool:
        return p >= 1 and p > self.duality

    def energy_admits(self, p: float) -> bool:
        return p >= 2 and p >= self.energy


def thresholds(beta: float, k: float, s: float, c0: float, one_intrinsic_bound: float) -> Thresholds:
    return Thresholds(p_threshold_energy(beta, k, s, c0),
                      p_threshold_duality(beta, k, s, c0, one_intrinsic_bound))


@dataclass
class Constants:
    C1: float
    C2: float
    C3: float
    C0: float
    W_section: Optional[float] = None


def constants_for(w: PowerWeight, metric: PseudoMetric) -> Constants:
    s = metric.jump
    return Constants(c1_constant(w.beta, w.k, s), c2_constant(w.beta, w.k, s),
                     c3_constant(w.beta, w.k, s), metric.intrinsic_bound(1.0))


@dataclass(frozen=True)
class MetricCertificate:
    jump: float
    one_intrinsic: float
    two_intrinsic: float

    @property
    def intrinsic(self) -> bool:
        return self.two_intrinsic <= 1.0 + INTRINSIC_SLACK


def certify_metric(g: WeightedGraph, metric: PseudoMetric) -> MetricCertificate:
    if metric.graph is not g:
        raise ParameterError("metric belongs to a different section")
    return MetricCertificate(metric.jump, metric.intrinsic_bound(1.0), metric.intrinsic_bound(2.0))


def _require_intrinsic(g, metric) -> MetricCertificate:
    cert = certify_metric(g, metric)
    if not cert.intrinsic:
        raise HypothesisError(
            f"metric is not intrinsic: q=2 bound {cert.two_intrinsic:.6g} > 1 on the interior"
        )
    return cert


def _require_shared(w: PowerWeight, potential: Potential) -> None:
    if w.k != potential.k:
        raise ParameterError(f"weight and potential must share k ({w.k:g} != {potential.k:g})")


def _abs_u(g, u) -> np.ndarray:
    if isinstance(u, Solution):
        if u.graph is not g:
            raise ParameterError("solution lives on a different section")
        if not u.residual_inf <= u.residual_bound:
            raise HypothesisError(f"solution residual {u.residual_inf:.3g} is not certified")
        return np.abs(u.values)
    if isinstance(u, VertexFunction):
        if u.graph is not g:
            raise ParameterError("function lives on a different section")
        return np.abs(u.values)
    v = np.abs(np.asarray(u, dtype=float)).reshape(-1)
    if v.size != g.n:
        raise ParameterError(f"expected {g.n} values, got {v.size}")
    return v


# -- cut-off ------------------------------------------------------------------

def cutoff_values(dist: np.ndarray, R: float, delta: float, s: float) -> np.ndarray:
    """min{[R - s - d]_+ / (delta R), 1}, for any R > 0 and 0 < delta < 1."""
    if not (R > 0 and 0 < delta < 1):
        raise ParameterError("cut-off needs R > 0 and 0 < delta < 1")
    return np.minimum(np.maximum(R - s - np.asarray(dist, dtype=float), 0.0) / (delta * R), 1.0)


@dataclass(eq=False)
class Cutoff:
    """Cut-off equal to 1 on B_{delta R}(x0), vanishing outside B_{R - s}(x0)."""

    R: float
    delta: float
    jump: float
    values: np.ndarray = field(repr=False)
    metric: PseudoMetric = field(repr=False)

    @property
    def support(self) -> np.ndarray:
        return self.values > 0

    def window(self, dist: np.ndarray) -> np.ndarray:
        """Indicator of (1 - delta) R - 2 s < d <= R, outside which the cut-off is flat."""
        lo = (1 - self.delta) * self.R - 2 * self.jump
        return (dist > lo) & (dist <= self.R)


def min_cutoff_radius(s: float, delta: float) -> float:
    """Cut-offs need R strictly above max{2 s / (1 - 2 delta), 1}."""
    return max(2 * s / (1 - 2 * delta), 1.0)


def build_cutoff(metric: PseudoMetric, R: float, delta: float) -> Cutoff:
    if not 0 < delta < 0.5:
        raise ParameterError(f"delta must lie in (0, 1/2), got {delta!r}")
    s = metric.jump
    lower = min_cutoff_radius(s, delta)
    if not R > lower:
        raise ParameterError(f"cut-off radius must exceed {lower:.9g} (got R={R:.9g})")
    return Cutoff(float(R), float(delta), s, cutoff_values(metric.dist_to_base, R, delta, s), metric)


def max_cutoff_radius(metric: PseudoMetric) -> float:
    """Largest R whose cut-off support, plus one hop, stays in the interior."""
    g = metric.graph
    outside = ~g.deep_interior
    if not outside.any():
        return np.inf
    return metric.jump + float(metric.dist_to_base[outside].min())


def _require_support(g, values, collar: bool, what: str) -> None:
    region = g.deep_interior if collar else g.interior
    bad = (values != 0) & ~region
    if np.any(bad):
        x = int(np.flatnonzero(bad)[0])
        need = "its neighbourhood" if collar else "it"
        raise HypothesisError(f"{what} is nonzero at vertex {x} but {need} is not interior")


# -- checks -------------------------------------------------------------------

def check_weight_increment(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight,
                           tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """|zeta(y) - zeta(x)| <= beta d(x, y) [d(x, x0) + k - s]^(-beta-1) on every oriented edge."""
    s = metric.jump
    _require_k_gt_s(w.k, s)
    src, dst, eid = g.oriented
    z = w.values(metric)
    d0 = metric.dist_to_base
    lhs = np.abs(z[dst] - z[src])
    rhs = w.beta * metric.edge_dist[eid] * (d0[src] + w.k - s) ** (-w.beta - 1)
    return summarize(
        "weight_increment", [("edge", rhs - lhs, lhs + rhs, edge_locator(src, dst))], tol,
        params={"beta": w.beta, "k": w.k, "s": s},
    )


def check_supersolution_bound(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight,
                              potential: Potential, p: float,
                              tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """At every interior x::

        1/2 sum_y omega (1 - zeta(y)/zeta(x))^2 - p V mu
            <= mu (1/2 C1^2 beta^2 (d+k)^-2 - p c0 (d+k)^-alpha)

    ``details['W_section']`` is the largest bracket on the right over the
    interior, the finite-section stand-in for its supremum over the graph.
    """
    _require_intrinsic(g, metric)
    s = metric.jump
    _require_k_gt_s(w.k, s)
    _require_shared(w, potential)
    if not p > 0:
        raise ParameterError("p must be positive")
    C1 = c1_constant(w.beta, w.k, s)
    src, dst, eid = g.oriented
    z = w.values(metric)
    V = potential.values(metric)
    dk = metric.dist_to_base + w.k
    osc = 0.5 * np.bincount(src, weights=g.weights[eid] * (1 - z[dst] / z[src]) ** 2, minlength=g.n)
    lhs = osc - p * V * g.mu
    a = 0.5 * C1 ** 2 * w.beta ** 2 * dk ** -2
    b = p * potential.c0 * dk ** (-potential.alpha)
    bracket = a - b
    rhs = g.mu * bracket
    idx = g.interior_index
    scale = osc + p * V * g.mu + g.mu * (a + b)
    W = float(bracket[idx].max())
    return summarize(
        "supersolution_bound", [("", (rhs - lhs)[idx], scale[idx], index_locator(idx))], tol,
        params={"beta": w.beta, "k": w.k, "s": s, "c0": potential.c0, "alpha": potential.alpha, "p": p},
        details={"W_section": W, "W_negative": W < 0, "C1": C1},
        notes=[ORIENTATION_NOTE],
    )


def check_cutoff_gradient(g: WeightedGraph, metric: PseudoMetric, cutoff: Cutoff,
                          tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """Edge and Laplacian bounds for the cut-off, with the flat-region window taken literally:

    |eta(y) - eta(x)| <= d(x, y) / (delta R) * chi(x) on every oriented edge and
    |Delta eta(x)| <= C0 / (delta R) * chi(x) at interior x, C0 being the
    certified 1-intrinsic bound.
    """
    if cutoff.metric is not metric or metric.graph is not g:
        raise ParameterError("cut-off, metric and section must belong together")
    C0 = metric.intrinsic_bound(1.0)
    src, dst, eid = g.oriented
    eta = cutoff.values
    d0 = metric.dist_to_base
    chi = cutoff.window(d0).astype(float)
    scale = 1.0 / (cutoff.delta * cutoff.R)
    lhs_e = np.abs(eta[dst] - eta[src])
    rhs_e = scale * metric.edge_dist[eid] * chi[src]
    idx = g.interior_index
    lhs_v = np.abs(laplacian_values(g, eta))[idx]
    rhs_v = (C0 * scale * chi)[idx]
    return summarize(
        "cutoff_gradient",
        [("edge", rhs_e - lhs_e, lhs_e + rhs_e, edge_locator(src, dst)),
         ("vertex", rhs_v - lhs_v, lhs_v + rhs_v, index_locator(idx))],
        tol,
        params={"R": cutoff.R, "delta": cutoff.delta, "s": cutoff.jump},
        details={"laplacian_bound_constant": C0, "laplacian_bound_source": "1-intrinsic bound"},
    )


def check_monotone_pair(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight, cutoff: Cutoff,
                        tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """[eta^2(y) - eta^2(x)] [zeta(y) - zeta(x)] >= 0 on every oriented edge."""
    src, dst, _ = g.oriented
    e2 = cutoff.values ** 2
    z = w.values(metric)
    a, b = e2[dst] - e2[src], z[dst] - z[src]
    prod = a * b
    return summarize("monotone_pair", [("edge", prod, np.abs(prod), edge_locator(src, dst))], tol,
                     params={"beta": w.beta, "k": w.k, "R": cutoff.R, "delta": cutoff.delta})


def check_a_priori_estimate(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight,
                            potential: Potential, p: float, cutoff: Cutoff, u,
                            tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """The weighted energy estimate for a solution u, p >= 2::

        1/2 sum_x |u|^p eta^2 zeta {p V mu - 1/2 sum_y omega (1 - zeta(y)/zeta(x))^2}
            <= sum_{x,y} |u(x)|^p zeta(y) (eta(y) - eta(x))^2 omega(x, y)

    The monotonicity hypothesis on (eta^2, zeta) is checked first and
    reported in ``details``.
    """
    if not p >= 2:
        raise ParameterError(f"the a-priori estimate needs p >= 2, got {p!r}")
    if cutoff.metric is not metric or metric.graph is not g:
        raise ParameterError("cut-off, metric and section must belong together")
    _require_support(g, cutoff.values, collar=False, what="cut-off")
    mono = check_monotone_pair(g, metric, w, cutoff, tol)
    if not mono.passed:
        raise HypothesisError(f"monotonicity hypothesis fails on edge {mono.worst_location}")
    up = _abs_u(g, u) ** p
    src, dst, eid = g.oriented
    om = g.weights[eid]
    z = w.values(metric)
    V = potential.values(metric)
    eta = cutoff.values
    osc = 0.5 * np.bincount(src, weights=om * (1 - z[dst] / z[src]) ** 2, minlength=g.n)
    pot = p * V * g.mu
    lhs_terms = 0.5 * up * eta ** 2 * z * (pot - osc)
    rhs_terms = up[src] * z[dst] * (eta[dst] - eta[src]) ** 2 * om
    lhs, rhs = lhs_terms.sum(), rhs_terms.sum()
    scale = (0.5 * up * eta ** 2 * z * (pot + osc)).sum() + rhs_terms.sum()
    return summarize(
        "a_priori_estimate", [("", rhs - lhs, scale, lambda i: "sum")], tol,
        params={"beta": w.beta, "k": w.k, "c0": potential.c0, "alpha": potential.alpha, "p": p,
                "R": cutoff.R, "delta": cutoff.delta},
        details={"lhs": lhs, "rhs": rhs, "monotone_pair_min": mono.worst_margin},
        notes=[ORIENTATION_NOTE],
    )


def check_weight_laplacian_bound(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight,
                                 potential: Potential, p: float,
                                 tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """Delta zeta - p V zeta <= [C0 C1 beta (d+k)^-1 - p c0 (d+k)^-alpha] zeta at interior x."""
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p!r}")
    s = metric.jump
    _require_k_gt_s(w.k, s)
    _require_shared(w, potential)
    C0 = certify_metric(g, metric).one_intrinsic
    C1 = c1_constant(w.beta, w.k, s)
    z = w.values(metric)
    V = potential.values(metric)
    dk = metric.dist_to_base + w.k
    lap = laplacian_values(g, z)
    lhs = lap - p * V * z
    a = C0 * C1 * w.beta / dk
    b = p * potential.c0 * dk ** (-potential.alpha)
    bracket = a - b
    rhs = bracket * z
    src, dst, eid = g.oriented
    lap_scale = np.bincount(src, weights=g.weights[eid] * (z[dst] + z[src]), minlength=g.n) / g.mu
    idx = g.interior_index
    scale = lap_scale + p * V * z + (a + b) * z
    return summarize(
        "weight_laplacian_bound", [("", (rhs - lhs)[idx], scale[idx], index_locator(idx))], tol,
        params={"beta": w.beta, "k": w.k, "s": s, "c0": potential.c0, "alpha": potential.alpha, "p": p},
        details={"C0": C0, "C1": C1, "bracket_max": float(bracket[idx].max()),
                 "bracket_negative": bool(np.all(bracket[idx] < 0))},
    )


def default_test_function(metric: PseudoMetric, w: PowerWeight, cutoff: Cutoff) -> np.ndarray:
    """v = eta * zeta."""
    return cutoff.values * w.values(metric)


def check_adjoint_inequality(g: WeightedGraph, metric: PseudoMetric, potential: Potential, p: float,
                             u, v=None, *, w: Optional[PowerWeight] = None,
                             cutoff: Optional[Cutoff] = None,
                             tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """sum_x |u|^p (-Delta v + p V v) mu <= 0 for a solution u and finitely supported v >= 0.

    ``v`` defaults to ``eta * zeta`` built from ``cutoff`` and ``w``.
    """
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p!r}")
    if v is None:
        if w is None or cutoff is None:
            raise ParameterError("give v, or both w and cutoff for the default v = eta * zeta")
        v = default_test_function(metric, w, cutoff)
    v = np.asarray(getattr(v, "values", v), dtype=float)
    if np.any(v < 0):
        raise HypothesisError("test function must be nonnegative")
    _require_support(g, v, collar=True, what="test function")
    up = _abs_u(g, u) ** p
    V = potential.values(metric)
    lap = np.nan_to_num(laplacian_values(g, v), nan=0.0)
    terms = up * (-lap + p * V * v) * g.mu
    total = terms.sum()
    src, dst, eid = g.oriented
    lap_abs = np.bincount(src, weights=g.weights[eid] * (v[dst] + v[src]), minlength=g.n) / g.mu
    lap_abs[~g.interior] = 0.0
    scale = (up * (lap_abs + p * V * v) * g.mu).sum()
    return summarize(
        "adjoint_inequality", [("", -total, scale, lambda i: "sum")], tol,
        params={"c0": potential.c0, "alpha": potential.alpha, "k": potential.k, "p": p},
        details={"sum": total},
    )


def check_boundary_terms(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight, p: float, u,
                         cutoff: Cutoff, tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """Cut-off error terms and their 1/(delta R) bounds::

        J1 = sum_x |u|^p zeta Delta eta mu,        |J1| <= C0 / (delta R) * N
        J2 = sum_{x,y} |u(x)|^p nabla eta nabla zeta omega,  |J2| <= C3 beta / (delta R) * N

    with N = sum_x |u|^p zeta mu over the section.
    """
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p!r}")
    if cutoff.metric is not metric or metric.graph is not g:
        raise ParameterError("cut-off, metric and section must belong together")
    cert = _require_intrinsic(g, metric)
    s = metric.jump
    _require_k_gt_s(w.k, s)
    _require_support(g, cutoff.values, collar=True, what="cut-off")
    up = _abs_u(g, u) ** p
    z = w.values(metric)
    eta = cutoff.values
    lap_eta = np.nan_to_num(laplacian_values(g, eta), nan=0.0)
    src, dst, eid = g.oriented
    J1_terms = up * z * lap_eta * g.mu
    J2_terms = up[src] * (eta[dst] - eta[src]) * (z[dst] - z[src]) * g.weights[eid]
    J1, J2 = J1_terms.sum(), J2_terms.sum()
    N = float((up * z * g.mu).sum())
    C3 = c3_constant(w.beta, w.k, s)
    inv = 1.0 / (cutoff.delta * cutoff.R)
    b1 = cert.one_intrinsic * inv * N
    b2 = C3 * w.beta * inv * N
    parts = [
        ("J1", b1 - abs(J1), b1 + np.abs(J1_terms).sum(), lambda i: "sum"),
        ("J2", b2 - abs(J2), b2 + np.abs(J2_terms).sum(), lambda i: "sum"),
    ]
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = abs(J1) / b1 if b1 > 0 else 0.0
        r2 = abs(J2) / b2 if b2 > 0 else 0.0
    return summarize(
        "boundary_terms", parts, tol,
        params={"beta": w.beta, "k": w.k, "p": p, "R": cutoff.R, "delta": cutoff.delta},
        details={"J1": J1, "J2": J2, "bound_J1": b1, "bound_J2": b2, "ratio_J1": r1, "ratio_J2": r2,
                 "weighted_norm_p": N},
    )


def boundary_term_sweep(g: WeightedGraph, metric: PseudoMetric, w: PowerWeight, p: float, u,
                        radii: Sequence[float], delta: float,
                        tol: Tolerance = DEFAULT_TOL) -> List[CheckReport]:
    """One :func:`check_boundary_terms` report per cut-off radius."""
    return [check_boundary_terms(g, metric, w, p, u, build_cutoff(metric, R, delta), tol) for R in radii]


def suggested_p(th: Thresholds) -> float:
    """Twice the smallest admissible exponent of the p >= 2 result."""
    return 2.0 * th.energy_p_min


def boundary_sweep_radii(R: float, s: float, delta: float) -> List[float]:
    """R/4, R/2, R, keeping only radii that admit a cut-off."""
    lower = min_cutoff_radius(s, delta)
    return [r for r in (R / 4, R / 2, R) if r > lower]


def shift_ratio_certificate(beta: float, k: float, s: float, rtol: float = 1e-12) -> CheckReport:
    """The sampled maximum of the shift ratio equals its value at t = 0."""
    t, ratio = shift_ratio_profile(beta, k, s)
    C1 = c1_constant(beta, k, s)
    margin = C1 - ratio
    return summarize("c1_certificate", [("t", margin, np.abs(ratio) + C1, lambda i: f"{t[i]:.6g}")],
                     Tolerance(abs=0.0, rel=rtol), params={"beta": beta, "k": k, "s": s},
                     details={"C1": C1, "sampled_max": float(ratio.max()),
                              "argmax_t": float(t[int(np.argmax(ratio))])})
