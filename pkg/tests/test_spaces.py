import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import weighted_norm_brute
from schrograph.errors import ParameterError
from schrograph.graph import GraphFamily, WeightedGraph, build_section
from schrograph.metric import scaled_hop_metric
from schrograph.spaces import Potential, PowerWeight, membership_sufficient, weight_value, weighted_lp_norm


def test_weight_at_base():
    g = build_section(GraphFamily.lattice(1), 2)
    m = scaled_hop_metric(g, 1.0)
    assert weight_value(PowerWeight(1, 2), m, g.base) == 0.5
    assert weight_value(PowerWeight(2, 1), m, g.base + 1) == 0.25


def test_weight_on_scaled_line():
    g = build_section(GraphFamily.lattice(1), 3)
    m = scaled_hop_metric(g, 1 / math.sqrt(2))
    assert weight_value(PowerWeight(1, 2), m, g.base + 2) == pytest.approx(0.292893219, rel=1e-9)


def test_potential_values():
    g = build_section(GraphFamily.lattice(1), 2)
    V = Potential(3.0, 1.0, 2.0).values(scaled_hop_metric(g, 1.0))
    assert V[g.base] == 3.0 and V[g.base + 1] == 0.75
    assert np.all(Potential(2.0, 1.0, 0.0).values(scaled_hop_metric(g, 1.0)) == 2.0)


@pytest.mark.parametrize("bad", [
    lambda: PowerWeight(0, 1), lambda: PowerWeight(1, -1), lambda: Potential(0, 1, 1),
    lambda: Potential(1, 1, -0.5), lambda: PowerWeight(float("nan"), 1),
])
def test_invalid_parameters(bad):
    with pytest.raises(ParameterError):
        bad()


def test_norm_examples():
    g = build_section(GraphFamily.lattice(1), 2)
    m = scaled_hop_metric(g, 1.0)
    assert weighted_lp_norm(np.zeros(g.n), 2, PowerWeight(1, 2), m) == 0
    assert weighted_lp_norm(np.ones(g.n), 1, PowerWeight(1, 1), m) == pytest.approx(8 / 3, rel=1e-15)
    with pytest.raises(ParameterError):
        weighted_lp_norm(np.ones(g.n), 0.5, PowerWeight(1, 1), m)


def test_norm_single_vertex():
    g = WeightedGraph(np.ones(1), np.zeros((0, 2)), [], 0, [True])
    m = scaled_hop_metric(g, 1.0)
    assert weighted_lp_norm(np.array([2.0]), 2, PowerWeight(1, 2), m) == pytest.approx(math.sqrt(2), rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1, 6), beta=st.floats(0.1, 5), k=st.floats(0.5, 5), seed=st.integers(0, 2 ** 16))
def test_norm_matches_brute_force(p, beta, k, seed):
    g = build_section(GraphFamily.rooted_tree(2), 3)
    m = scaled_hop_metric(g, 0.7)
    u = np.random.default_rng(seed).normal(size=g.n)
    got = weighted_lp_norm(u, p, PowerWeight(beta, k), m)
    assert got == pytest.approx(weighted_norm_brute(u, p, beta, k, m.dist_to_base, g.mu), rel=1e-12)


def test_norm_grows_with_section():
    w = PowerWeight(1.0, 2.0)
    vals = []
    for R in (2, 4, 8):
        g = build_section(GraphFamily.lattice(2), R)
        vals.append(weighted_lp_norm(np.ones(g.n), 2, w, scaled_hop_metric(g, 0.5)))
    assert vals == sorted(vals)


@pytest.mark.parametrize("beta,m,sigma,p,expected", [
    (3, 1, 0, 2, True), (2, 1, 0, 2, False), (4, 1, 1, 2, False), (5, 2, 0.9, 2, True),
])
def test_membership(beta, m, sigma, p, expected):
    assert membership_sufficient(beta, p, m, sigma) is expected
