"""Difference operator, weighted graph Laplacian and checks of the calculus identities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, HypothesisError, ParameterError
from .graph import WeightedGraph, _readonly
from .report import DEFAULT_TOL, CheckReport, Tolerance, edge_locator, index_locator, summarize


@dataclass(eq=False)
class VertexFunction:
    """Real function on the vertices of a section.

    ``domain`` marks where the values are defined; operators that are only
    exact on the interior return functions whose domain is the interior.
    """

    graph: WeightedGraph = field(repr=False)
    values: np.ndarray
    domain: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.graph.n:
            raise ParameterError(f"expected {self.graph.n} values, got {v.size}")
        self.values = _readonly(v)
        if self.domain is not None:
            self.domain = _readonly(np.asarray(self.domain, dtype=bool))

    @classmethod
    def of(cls, g: WeightedGraph, fn: Callable) -> "VertexFunction":
        """Evaluate ``fn`` at each vertex: on coordinates when the section has them, else on indices."""
        if g.coords is None:
            vals = [fn(i) for i in range(g.n)]
        else:
            vals = [fn(*map(int, c)) for c in g.coords]
        return cls(g, np.array(vals, dtype=float))

    @classmethod
    def constant(cls, g: WeightedGraph, c: float) -> "VertexFunction":
        return cls(g, np.full(g.n, float(c)))

    def __call__(self, x: int) -> float:
        if self.domain is not None and not self.domain[x]:
            raise DomainError(f"function is undefined at vertex {x}")
        return float(self.values[x])


def _bind(g: WeightedGraph, f) -> np.ndarray:
    if isinstance(f, VertexFunction):
        if f.graph is not g:
            raise ParameterError("function is bound to a different section")
        return f.values
    v = np.asarray(f, dtype=float).reshape(-1)
    if v.size != g.n:
        raise ParameterError(f"expected {g.n} values, got {v.size}")
    return v


def difference(f: VertexFunction, x: int, y: int) -> float:
    """nabla_xy f = f(y) - f(x)."""
    return float(f.values[y] - f.values[x])


def laplacian_values(g: WeightedGraph, f) -> np.ndarray:
    """Delta f on every vertex as an array; NaN off the interior."""
    v = _bind(g, f)
    src, dst, eid = g.oriented
    flux = np.bincount(src, weights=g.weights[eid] * (v[dst] - v[src]), minlength=g.n)
    out = flux / g.mu
    out[~g.interior] = np.nan
    return out


def laplacian(g: WeightedGraph, f: VertexFunction) -> VertexFunction:
    """Delta f(x) = (1/mu(x)) sum_y omega(x, y) (f(y) - f(x)), defined on interior vertices."""
    return VertexFunction(g, laplacian_values(g, f), domain=g.interior)


@dataclass(frozen=True)
class ConvexFunction:
    """A C^1 scalar function together with its derivative."""

    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    name: str = "psi"


SQUARE = ConvexFunction(lambda t: t * t, lambda t: 2 * t, "t^2")
QUARTIC = ConvexFunction(lambda t: t ** 4, lambda t: 4 * t ** 3, "t^4")


def smooth_abs_power(p: float, eps: float = 1e-2) -> ConvexFunction:
    """(t^2 + eps^2)^(p/2), a smooth convex stand-in for |t|^p (p >= 2)."""
    if p < 2:
        raise ParameterError("smooth_abs_power needs p >= 2")
    e2 = eps * eps
    return ConvexFunction(
        lambda t: (t * t + e2) ** (p / 2),
        lambda t: p * t * (t * t + e2) ** (p / 2 - 1),
        f"smooth|t|^{p:g}",
    )


def certify_convex(psi: ConvexFunction, lo: float, hi: float, samples: int = 513) -> None:
    """Sampled second-difference convexity test on [lo, hi]; raises HypothesisError on failure."""
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    t = np.linspace(lo, hi, samples)
    y = np.asarray(psi.value(t), dtype=float)
    second = y[:-2] - 2 * y[1:-1] + y[2:]
    scale = np.abs(y[:-2]) + 2 * np.abs(y[1:-1]) + np.abs(y[2:])
    bad = second < -1e-12 * scale - 1e-300
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + 1
        raise HypothesisError(f"{psi.name} is not convex near t={t[i]:.6g}")


def check_calculus_identities(g: WeightedGraph, f, h, psi: ConvexFunction = SQUARE,
                              tol: Tolerance = DEFAULT_TOL) -> CheckReport:
    """Check product rule, Green's formula (both forms), the Laplacian product formula
    and the convex-composition inequality on one section.

    ``details`` holds the largest relative violation of each identity.
    """
    fv, hv = _bind(g, f), _bind(g, h)
    certify_convex(psi, float(fv.min()), float(fv.max()))
    src, dst, eid = g.oriented
    w = g.weights[eid]
    mu = g.mu
    inner = g.interior
    n = g.n
    df, dh = fv[dst] - fv[src], hv[dst] - hv[src]
    parts, rel = [], {}

    def record(label, diff, scale, locate, one_sided=False):
        diff = np.atleast_1d(diff)
        scale = np.atleast_1d(scale)
        viol = np.maximum(0.0, -diff) if one_sided else np.abs(diff)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(scale > 0, viol / np.where(scale > 0, scale, 1.0), viol)
        rel[label] = float(r.max()) if r.size else 0.0
        parts.append((label, diff if one_sided else -np.abs(diff), scale, locate))

    def per_vertex(vals):
        return np.bincount(src, weights=vals, minlength=n)

    # product rule on every oriented edge
    prod = fv * hv
    lhs = prod[dst] - prod[src]
    t1, t2 = fv[src] * dh, hv[dst] * df
    record("product_rule", lhs - (t1 + t2),
           np.abs(prod[dst]) + np.abs(prod[src]) + np.abs(t1) + np.abs(t2),
           edge_locator(src, dst))

    # Green's formula with boundary term, Omega = interior
    in_src = inner[src]
    both = in_src & inner[dst]
    leave = in_src & ~inner[dst]
    green_l = w * df * hv[src]
    green_r = w * df * dh
    lhs = np.sum(green_l[in_src])
    rhs = -0.5 * np.sum(green_r[both]) + np.sum(green_l[leave])
    scale = np.sum(np.abs(green_l[in_src])) + 0.5 * np.sum(np.abs(green_r[both])) + np.sum(np.abs(green_l[leave]))
    record("green_boundary", lhs - rhs, scale, lambda i: "interior")

    # compact form: h cut down to vertices whose neighbourhood is interior
    hc = np.where(g.deep_interior, hv, 0.0)
    dhc = hc[dst] - hc[src]
    gl = w * df * hc[src]
    gr = w * df * dhc
    lhs = np.sum(gl[in_src])
    rhs = -0.5 * np.sum(gr[both])
    scale = np.sum(np.abs(gl[in_src])) + 0.5 * np.sum(np.abs(gr[both]))
    record("green_compact", lhs - rhs, scale, lambda i: "deep_interior")

    idx = np.flatnonzero(inner)
    loc = index_locator(idx)

    # Delta(fh) = f Delta h + h Delta f + (1/mu) sum nabla f nabla h omega
    lap_fh = per_vertex(w * (prod[dst] - prod[src])) / mu
    lap_f = per_vertex(w * df) / mu
    lap_h = per_vertex(w * dh) / mu
    cross = per_vertex(w * df * dh) / mu
    diff = lap_fh - (fv * lap_h + hv * lap_f + cross)
    scale = per_vertex(w * (np.abs(prod[dst]) + np.abs(prod[src]) + np.abs(fv[src] * dh)
                            + np.abs(hv[src] * df) + np.abs(df * dh))) / mu
    record("laplacian_product", diff[idx], scale[idx], loc)

    # Delta psi(f) >= psi'(f) Delta f
    pf = np.asarray(psi.value(fv), dtype=float)
    dpf = np.asarray(psi.derivative(fv), dtype=float)
    lap_pf = per_vertex(w * (pf[dst] - pf[src])) / mu
    margin = lap_pf - dpf * lap_f
    scale = (per_vertex(w * (np.abs(pf[dst]) + np.abs(pf[src])))
             + np.abs(dpf) * per_vertex(w * (np.abs(fv[dst]) + np.abs(fv[src])))) / mu
    record("convex_composition", margin[idx], scale[idx], loc, one_sided=True)

    return summarize(
        "calculus_identities", parts, tol,
        params={"graph": g.label or "custom", "psi": psi.name, "vertices": g.n},
        details={f"max_rel_violation.{k}": v for k, v in rel.items()},
    )
