"""Finite ball sections of weighted infinite graphs.

An infinite graph is never materialised. A *section* is the combinatorial
ball of a given hop radius around the base vertex, together with the set of
*interior* vertices whose ambient neighbourhood is entirely contained in the
section. Operators are only evaluated at interior vertices, where they agree
with their values on the ambient graph.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from numbers import Real
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DomainError, OutOfSectionError, ParameterError

Profile = Union[float, Callable[[int], float]]

LATTICE = "lattice"
ROOTED_TREE = "rooted_tree"
WEIGHTED_PATH = "weighted_path"


def _readonly(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GraphFamily:
    """Recipe for an ambient infinite graph.

    Use the constructors :meth:`lattice`, :meth:`rooted_tree` and
    :meth:`weighted_path` rather than filling fields by hand.
    """

    kind: str
    dim: int = 1
    branching: int = 2
    mu_profile: Profile = 1.0
    omega_profile: Profile = 1.0

    def __post_init__(self):
        if self.kind == LATTICE:
            if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
                raise ParameterError(f"lattice dimension must be an integer >= 1, got {self.dim!r}")
        elif self.kind == ROOTED_TREE:
            if not isinstance(self.branching, (int, np.integer)) or self.branching < 2:
                raise ParameterError(f"tree branching factor must be an integer >= 2, got {self.branching!r}")
        elif self.kind == WEIGHTED_PATH:
            for name in ("mu_profile", "omega_profile"):
                prof = getattr(self, name)
                if isinstance(prof, Real) and not prof > 0:
                    raise ParameterError(f"{name} must be positive, got {prof!r}")
        else:
            raise ParameterError(f"unknown graph family {self.kind!r}")

    @classmethod
    def lattice(cls, m: int) -> "GraphFamily":
        return cls(LATTICE, dim=m)

    @classmethod
    def rooted_tree(cls, b: int) -> "GraphFamily":
        return cls(ROOTED_TREE, branching=b)

    @classmethod
    def weighted_path(cls, mu_profile: Profile = 1.0, omega_profile: Profile = 1.0) -> "GraphFamily":
        """Path on the integers; ``omega_profile(i)`` weighs the edge ``(i, i+1)``."""
        return cls(WEIGHTED_PATH, mu_profile=mu_profile, omega_profile=omega_profile)

    def describe(self) -> str:
        if self.kind == LATTICE:
            return f"lattice(m={self.dim})"
        if self.kind == ROOTED_TREE:
            return f"rooted_tree(b={self.branching})"
        return "weighted_path"


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """A finite, connected, loop-free weighted graph with an interior marking.

    Edges are stored once, as pairs ``(i, j)`` with ``i < j``; symmetry of the
    edge weight is therefore structural. ``ambient_degree`` (optional) gives
    the number of neighbours each vertex has in the ambient infinite graph and
    is used to certify that interior vertices are complete.
    """

    mu: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    base: int
    interior: np.ndarray
    coords: Optional[np.ndarray] = None
    ambient_degree: Optional[np.ndarray] = None
    label: str = ""
    hop_radius: Optional[int] = field(default=None)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        n = mu.size
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        interior = np.asarray(self.interior, dtype=bool).reshape(-1)
        if n == 0:
            raise ParameterError("a section needs at least one vertex")
        if weights.size != edges.shape[0]:
            raise ParameterError("one weight per edge is required")
        if interior.size != n:
            raise ParameterError("interior mask must have one entry per vertex")
        if not (0 <= int(self.base) < n):
            raise ParameterError(f"base vertex {self.base} is not in the section")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ParameterError("node measure must be positive and finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ParameterError("edge weights must be nonnegative and finite")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ParameterError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ParameterError("loops are not allowed: omega(x, x) must be 0")
        # canonical orientation i < j, then reject duplicates
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges, weights = edges[order], weights[order]
        if edges.shape[0] > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise ParameterError("duplicate edge: each unordered pair may be given once")
        keep = weights > 0
        edges, weights = edges[keep], weights[keep]

        object.__setattr__(self, "mu", _readonly(mu))
        object.__setattr__(self, "edges", _readonly(edges))
        object.__setattr__(self, "weights", _readonly(weights))
        object.__setattr__(self, "interior", _readonly(interior))
        object.__setattr__(self, "base", int(self.base))
        if self.coords is not None:
            coords = np.asarray(self.coords, dtype=np.int64)
            if coords.shape[0] != n:
                raise ParameterError("coords must have one row per vertex")
            object.__setattr__(self, "coords", _readonly(coords.reshape(n, -1)))
        if self.ambient_degree is not None:
            amb = np.asarray(self.ambient_degree, dtype=np.int64).reshape(-1)
            if amb.size != n:
                raise ParameterError("ambient_degree must have one entry per vertex")
            object.__setattr__(self, "ambient_degree", _readonly(amb))

        if n > 1:
            ncomp, _ = connected_components(self.adjacency, directed=False)
            if ncomp != 1:
                raise ParameterError(f"section is not connected ({ncomp} components)")
        if self.ambient_degree is not None:
            short = self.interior & (self.neighbor_count != self.ambient_degree)
            if np.any(short):
                bad = int(np.flatnonzero(short)[0])
                raise ParameterError(
                    f"interior vertex {bad} is missing ambient neighbours "
                    f"({self.neighbor_count[bad]} of {self.ambient_degree[bad]} present)"
                )

    @classmethod
    def from_weight_matrix(cls, omega, mu, base=0, interior=None, **kwargs) -> "WeightedGraph":
        """Ingest a dense weight matrix, asserting symmetry and absence of loops."""
        omega = np.asarray(omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
            raise ParameterError("weight matrix must be square")
        if not np.array_equal(omega, omega.T):
            raise ParameterError("weight matrix is not symmetric")
        if np.any(np.diag(omega) != 0):
            raise ParameterError("loops are not allowed: omega(x, x) must be 0")
        i, j = np.nonzero(np.triu(omega, 1))
        if interior is None:
            interior = np.ones(omega.shape[0], dtype=bool)
        return cls(mu=mu, edges=np.column_stack([i, j]), weights=omega[i, j], base=base,
                   interior=interior, **kwargs)

    @property
    def n(self) -> int:
        return int(self.mu.size)

    @property
    def n_edges(self) -> int:
        return int(self.weights.size)

    @cached_property
    def oriented(self):
        """Both orientations of every edge, sorted by (source, target).

        Returns ``(src, dst, edge_id)``; ``edge_id`` indexes :attr:`edges`.
        """
        e = self.edges
        m = e.shape[0]
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        return _readonly(src[order]), _readonly(dst[order]), _readonly(eid[order])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse weight matrix omega."""
        src, dst, eid = self.oriented
        return sp.csr_matrix((self.weights[eid], (src, dst)), shape=(self.n, self.n))

    @cached_property
    def degree(self) -> np.ndarray:
        """deg(x) = sum_y omega(x, y) over neighbours present in the section."""
        src, _, eid = self.oriented
        return _readonly(np.bincount(src, weights=self.weights[eid], minlength=self.n))

    @cached_property
    def neighbor_count(self) -> np.ndarray:
        src, _, _ = self.oriented
        return _readonly(np.bincount(src, minlength=self.n))

    @cached_property
    def hops(self) -> np.ndarray:
        """Combinatorial distance of every vertex from the base vertex."""
        if self.n == 1:
            return _readonly(np.zeros(1, dtype=np.int64))
        d = shortest_path(self.adjacency, unweighted=True, indices=self.base, directed=False)
        return _readonly(np.rint(d).astype(np.int64))

    @cached_property
    def interior_index(self) -> np.ndarray:
        return _readonly(np.flatnonzero(self.interior))

    @cached_property
    def deep_interior(self) -> np.ndarray:
        """Interior vertices all of whose neighbours are interior too."""
        src, dst, _ = self.oriented
        bad = np.zeros(self.n, dtype=bool)
        bad[src[~self.interior[dst]]] = True
        return _readonly(self.interior & ~bad)

    def require_interior(self, x: int) -> None:
        if not (0 <= x < self.n):
            raise DomainError(f"vertex {x} is not in the section")
        if not self.interior[x]:
            raise DomainError(f"vertex {x} is a boundary vertex; ambient neighbours are missing")

    def vertex_label(self, x: int) -> str:
        if self.coords is None:
            return str(int(x))
        return ";".join(str(int(c)) for c in self.coords[x])


def _profile_value(profile: Profile, i: int) -> float:
    v = profile(i) if callable(profile) else profile
    return float(v)


def _lattice_section(m: int, R: int) -> WeightedGraph:
    pts = [p for p in itertools.product(range(-R, R + 1), repeat=m) if sum(map(abs, p)) <= R]
    coords = np.array(pts, dtype=np.int64).reshape(-1, m)
    index = {p: i for i, p in enumerate(pts)}
    edges = []
    for i, p in enumerate(pts):
        for axis in range(m):
            q = list(p)
            q[axis] += 1
            j = index.get(tuple(q))
            if j is not None:
                edges.append((i, j))
    l1 = np.abs(coords).sum(axis=1)
    return WeightedGraph(
        mu=np.ones(len(pts)),
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        weights=np.ones(len(edges)),
        base=index[(0,) * m],
        interior=l1 <= R - 1,
        coords=coords,
        ambient_degree=np.full(len(pts), 2 * m),
        label=f"lattice(m={m})",
        hop_radius=R,
    )


def _tree_section(b: int, R: int) -> WeightedGraph:
    n = (b ** (R + 1) - 1) // (b - 1)
    child = np.arange(1, n)
    parent = (child - 1) // b
    depth = np.zeros(n, dtype=np.int64)
    for c in range(1, n):
        depth[c] = depth[(c - 1) // b] + 1
    ambient = np.full(n, b + 1)
    ambient[0] = b
    return WeightedGraph(
        mu=np.ones(n),
        edges=np.column_stack([parent, child]),
        weights=np.ones(n - 1),
        base=0,
        interior=depth <= R - 1,
        ambient_degree=ambient,
        label=f"rooted_tree(b={b})",
        hop_radius=R,
    )


def _path_section(family: GraphFamily, R: int) -> WeightedGraph:
    xs = np.arange(-R, R + 1)
    mu = np.array([_profile_value(family.mu_profile, int(i)) for i in xs])
    w = np.array([_profile_value(family.omega_profile, int(i)) for i in xs[:-1]])
    if np.any(mu <= 0) or np.any(w <= 0):
        raise ParameterError("weighted_path profiles must be positive")
    k = np.arange(2 * R)
    return WeightedGraph(
        mu=mu,
        edges=np.column_stack([k, k + 1]),
        weights=w,
        base=R,
        interior=np.abs(xs) <= R - 1,
        coords=xs.reshape(-1, 1),
        ambient_degree=np.full(xs.size, 2),
        label="weighted_path",
        hop_radius=R,
    )


def build_section(family: GraphFamily, hop_radius: int) -> WeightedGraph:
    """Combinatorial ball of ``hop_radius`` hops around the family's root.

    Interior vertices are those at hop distance at most ``hop_radius - 1``.
    Lattices and trees carry unit node measure and unit edge weights.
    """
    if isinstance(hop_radius, bool) or not isinstance(hop_radius, (int, np.integer)) or hop_radius < 1:
        raise ParameterError(f"hop_radius must be an integer >= 1, got {hop_radius!r}")
    hop_radius = int(hop_radius)
    if family.kind == LATTICE:
        return _lattice_section(family.dim, hop_radius)
    if family.kind == ROOTED_TREE:
        return _tree_section(family.branching, hop_radius)
    return _path_section(family, hop_radius)


def weighted_degree(g: WeightedGraph, x: int) -> float:
    """Deg(x) = deg(x) / mu(x); only meaningful at interior vertices."""
    g.require_interior(x)
    return float(g.degree[x] / g.mu[x])


def ball_measure(g: WeightedGraph, metric, r: float) -> float:
    """mu(B_r(x0)), the measure of the open metric ball ``{d(x, x0) < r}``."""
    if not r > 0:
        raise ParameterError(f"ball radius must be positive, got {r!r}")
    if metric.graph is not g:
        raise ParameterError("metric belongs to a different section")
    if r > metric.covered_radius:
        raise OutOfSectionError(
            f"B_{r}(x0) is not contained in the section (covered radius {metric.covered_radius})"
        )
    inside = metric.dist_to_base < r
    return float(g.mu[inside].sum())
