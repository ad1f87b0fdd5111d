"""Pseudo-metrics on sections, jump size and q-intrinsic bounds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .errors import DomainError, ParameterError
from .graph import WeightedGraph, _readonly

# q=2 certification slack: c = 1/sqrt(Deg) gives c**2 * Deg = 1 only up to rounding
INTRINSIC_SLACK = 1e-12


@dataclass(eq=False)
class PseudoMetric:
    """Distances needed by the estimates: to the base vertex and across edges.

    ``edge_dist`` is aligned with ``graph.edges``. ``covered_radius`` is the
    largest r for which the open ball B_r(x0) lies inside the section.
    ``q_bounds`` caches certified q-intrinsic bounds, keyed by q.
    """

    graph: WeightedGraph = field(repr=False)
    dist_to_base: np.ndarray
    edge_dist: np.ndarray
    covered_radius: float = np.inf
    scale: Optional[float] = None
    q_bounds: Dict[float, float] = field(default_factory=dict)

    def __post_init__(self):
        g = self.graph
        d0 = np.asarray(self.dist_to_base, dtype=float).reshape(-1)
        de = np.asarray(self.edge_dist, dtype=float).reshape(-1)
        if d0.size != g.n or de.size != g.n_edges:
            raise ParameterError("metric arrays do not match the section")
        if np.any(d0 < 0) or np.any(de < 0):
            raise ParameterError("distances must be nonnegative")
        if d0[g.base] != 0:
            raise ParameterError("d(x0, x0) must be 0")
        i, j = g.edges[:, 0], g.edges[:, 1]
        gap = np.abs(d0[i] - d0[j]) - de
        if gap.size and gap.max() > 1e-12 * max(1.0, float(d0.max())):
            e = int(np.argmax(gap))
            raise ParameterError(f"triangle inequality fails along edge ({i[e]}, {j[e]})")
        self.dist_to_base = _readonly(d0)
        self.edge_dist = _readonly(de)

    @property
    def base(self) -> int:
        return self.graph.base

    @property
    def jump(self) -> float:
        """Jump size s: the largest distance across an edge."""
        return float(self.edge_dist.max()) if self.edge_dist.size else 0.0

    def oriented_edge_dist(self) -> np.ndarray:
        """``edge_dist`` laid out like ``graph.oriented``."""
        return self.edge_dist[self.graph.oriented[2]]

    def intrinsic_bound(self, q: float) -> float:
        if q not in self.q_bounds:
            q_intrinsic_bound(self.graph, self, q)
        return self.q_bounds[q]

    def is_intrinsic(self) -> bool:
        """True when the certified q=2 bound is at most 1."""
        return self.intrinsic_bound(2.0) <= 1.0 + INTRINSIC_SLACK


def scaled_hop_metric(g: WeightedGraph, c: float) -> PseudoMetric:
    """d(x, y) = c * (hop distance); every edge has length c."""
    if not (np.isfinite(c) and c > 0):
        raise ParameterError(f"metric scaling must be positive, got {c!r}")
    hops = g.hops
    outside = hops[~g.interior]
    covered = c * (float(outside.min()) + 1.0) if outside.size else np.inf
    return PseudoMetric(
        graph=g,
        dist_to_base=c * hops.astype(float),
        edge_dist=np.full(g.n_edges, float(c)),
        covered_radius=covered,
        scale=float(c),
    )


def q_intrinsic_bound(g: WeightedGraph, metric: PseudoMetric, q: float) -> float:
    """max over interior x of (1/mu(x)) * sum_y omega(x, y) d(x, y)**q.

    Only interior vertices are certified. For the homogeneous generated
    families this is the ambient supremum; for arbitrary graphs it is a
    lower bound on it.
    """
    if not q >= 1:
        raise ParameterError(f"q must be >= 1, got {q!r}")
    if metric.graph is not g:
        raise ParameterError("metric belongs to a different section")
    if not g.interior.any():
        raise DomainError("section has no interior vertex")
    src, _, eid = g.oriented
    per_vertex = np.bincount(src, weights=g.weights[eid] * metric.edge_dist[eid] ** q, minlength=g.n)
    bound = float((per_vertex / g.mu)[g.interior].max())
    metric.q_bounds[float(q)] = bound
    return bound


def intrinsic_scaling(g: WeightedGraph) -> float:
    """c = 1/sqrt(max interior Deg), the largest scaling keeping the hop metric intrinsic."""
    if not g.interior.any():
        raise DomainError("section has no interior vertex")
    deg = (g.degree / g.mu)[g.interior].max()
    return float(1.0 / np.sqrt(deg))
