"""Power weights, decaying potentials and weighted l^p partial norms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .metric import PseudoMetric


@dataclass(frozen=True)
class PowerWeight:
    """zeta_beta(x) = [d(x, x0) + k]^(-beta), x0 being the metric's base vertex."""

    beta: float
    k: float

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ParameterError(f"beta must be positive, got {self.beta!r}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ParameterError(f"k must be positive, got {self.k!r}")

    def values(self, metric: PseudoMetric) -> np.ndarray:
        return (metric.dist_to_base + self.k) ** (-self.beta)


@dataclass(frozen=True)
class Potential:
    """V(x) = c0 [d(x, x0) + k]^(-alpha): the lower envelope of the decay hypothesis, taken with equality."""

    c0: float
    k: float
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.c0) and self.c0 > 0):
            raise ParameterError(f"c0 must be positive, got {self.c0!r}")
        if not (np.isfinite(self.k) and self.k > 0):
            raise ParameterError(f"k must be positive, got {self.k!r}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ParameterError(f"alpha must be nonnegative, got {self.alpha!r}")

    def values(self, metric: PseudoMetric) -> np.ndarray:
        return self.c0 * (metric.dist_to_base + self.k) ** (-self.alpha)


def weight_value(w: PowerWeight, metric: PseudoMetric, x: int) -> float:
    return float((metric.dist_to_base[x] + w.k) ** (-w.beta))


def weighted_lp_norm(u, p: float, w: PowerWeight, metric: PseudoMetric) -> float:
    """(sum_x |u(x)|^p zeta_beta(x) mu(x))^(1/p) over the section.

    This is a partial sum: a truncation of the norm on the infinite graph,
    which can only grow as the section is enlarged.
    """
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p!r}")
    vals = np.asarray(getattr(u, "values", u), dtype=float)
    g = metric.graph
    terms = np.abs(vals) ** p * w.values(metric) * g.mu
    return float(np.sum(terms) ** (1.0 / p))


def membership_sufficient(beta: float, p: float, m: int, sigma: float) -> bool:
    """Volume growth ``mu(B_R) <= C R^m`` plus ``u <= C (d + 1)^sigma`` puts u in l^p_{zeta_beta}
    whenever beta > m + 1 and sigma < (beta - m - 1) / p."""
    if m < 0 or sigma < 0 or p < 1:
        raise ParameterError("need m >= 0, sigma >= 0, p >= 1")
    return bool(beta > m + 1 and sigma < (beta - m - 1) / p)
