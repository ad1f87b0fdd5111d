from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import path_center_value, solve_exact, solve_sparse
from schrograph.errors import ParameterError, SolverError
from schrograph.graph import GraphFamily, build_section
from schrograph.metric import scaled_hop_metric
from schrograph.solver import (DirichletProblem, exhaustion_sweep, residual_inf, solve_dirichlet,
                               solve_dirichlet_dense, spd_certificate, system_matrix)
from schrograph.spaces import Potential

FLAT = Potential(1.0, 2.0, 0.0)  # V == 1


def problem(fam, R, pot=FLAT, boundary=1.0, c=None):
    g = build_section(fam, R)
    return DirichletProblem(g, scaled_hop_metric(g, c or 0.5), pot, boundary)


def test_three_vertex_path():
    sol = solve_dirichlet(problem(GraphFamily.weighted_path(), 1))
    assert sol.values[1] == pytest.approx(2 / 3, abs=1e-12)


def test_five_vertex_line_against_exact_elimination():
    pb = problem(GraphFamily.lattice(1), 2)
    g = pb.graph
    exact = solve_exact(5, {tuple(map(int, e)): Fraction(1) for e in g.edges}, [Fraction(1)] * 5,
                        [Fraction(1)] * 5, [1, 2, 3], {0: Fraction(1), 4: Fraction(1)})
    assert exact[2] == Fraction(2, 7) and exact[1] == exact[3] == Fraction(3, 7)
    sol = solve_dirichlet(pb)
    for x in range(5):
        assert sol.values[x] == pytest.approx(float(exact[x]), abs=1e-12)


def test_stated_rationals_do_not_solve_the_system():
    # 7/13 at +-1 and 4/13 at 0 leave a residual of order 1
    pb = problem(GraphFamily.lattice(1), 2)
    bad = np.array([1, 7 / 13, 4 / 13, 7 / 13, 1])
    assert residual_inf(pb, bad) > 0.1


def test_zero_boundary_gives_zero():
    sol = solve_dirichlet(problem(GraphFamily.lattice(2), 4, boundary=0.0))
    assert np.all(sol.values == 0)


@pytest.mark.parametrize("c0", [0.01, 0.5, 3.0])
def test_constant_potential_closed_form(c0):
    R = 12
    sol = solve_dirichlet(problem(GraphFamily.weighted_path(), R, Potential(c0, 2.0, 0.0)))
    assert sol.values[R] == pytest.approx(path_center_value(c0, R), rel=1e-9, abs=1e-12)


def test_small_potential_tends_to_one():
    vals = [solve_dirichlet(problem(GraphFamily.lattice(2), 4, Potential(c0, 2.0, 0.0))).values.min()
            for c0 in (1e-2, 1e-4, 1e-6)]
    assert vals == sorted(vals) and vals[-1] > 1 - 1e-4


@pytest.mark.parametrize("fam,R", [
    (GraphFamily.lattice(1), 10), (GraphFamily.lattice(2), 4), (GraphFamily.lattice(3), 2),
    (GraphFamily.rooted_tree(2), 4), (GraphFamily.rooted_tree(3), 3),
])
@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 3.0])
def test_cg_agrees_with_dense_and_sparse_oracles(fam, R, alpha):
    pb = problem(fam, R, Potential(1.0, 2.0, alpha))
    assert pb.graph.interior.sum() <= 50
    sol = solve_dirichlet(pb)
    assert sol.residual_inf <= 1e-10 * (1 + pb.boundary_sup)
    assert np.max(np.abs(sol.values - solve_dirichlet_dense(pb))) <= 1e-10
    ref = solve_sparse(pb.graph, pb.potential_values(), pb.boundary_data)
    assert np.max(np.abs(sol.values - ref)) <= 1e-10


def test_system_is_diagonally_dominant():
    A, b, I, B = system_matrix(problem(GraphFamily.lattice(2), 6))
    assert abs(A - A.T).max() == 0
    assert spd_certificate(A) > 0
    assert I.size + B.size == A.shape[0] + B.size


def test_k_must_exceed_jump():
    g = build_section(GraphFamily.lattice(1), 3)
    with pytest.raises(ParameterError, match="requires k > s"):
        DirichletProblem(g, scaled_hop_metric(g, 2.0), FLAT)


def test_iteration_cap_falls_back_to_dense():
    sol = solve_dirichlet(problem(GraphFamily.lattice(2), 6), max_iter=2)
    assert sol.method == "dense" and sol.residual_inf <= sol.residual_bound


def test_large_system_without_convergence_raises(monkeypatch):
    import schrograph.solver as solver
    monkeypatch.setattr(solver, "DENSE_FALLBACK_LIMIT", 10)
    with pytest.raises(SolverError) as err:
        solve_dirichlet(problem(GraphFamily.lattice(2), 6), max_iter=2)
    assert err.value.best_residual > 0


def test_boundary_function_data():
    pb = problem(GraphFamily.lattice(1), 5, boundary=np.linspace(-1, 3, 11))
    sol = solve_dirichlet(pb)
    assert sol.values[0] == -1 and sol.values[-1] == 3
    assert sol.residual_inf <= 1e-10 * 4


@settings(max_examples=25, deadline=None)
@given(c0=st.floats(0.05, 10), alpha=st.floats(0, 4), k=st.floats(0.6, 5), R=st.integers(2, 6),
       m=st.integers(1, 2))
def test_maximum_principle(c0, alpha, k, R, m):
    sol = solve_dirichlet(problem(GraphFamily.lattice(m), R, Potential(c0, k, alpha)))
    assert sol.values.min() >= 0 and sol.values.max() <= 1 + 1e-12


def test_sweep_is_monotone_and_decays_geometrically():
    res = exhaustion_sweep(GraphFamily.lattice(1), "intrinsic", Potential(1.0, 2.0, 0.0), [2, 4, 6, 8, 10])
    assert res.is_monotone()
    for R, v in zip(res.radii, res.center_values):
        assert v == pytest.approx(path_center_value(1.0, R), rel=1e-8)
    assert res.deltas()[0] is None and all(d < 0 for d in res.deltas()[1:])


def test_sweep_arguments():
    with pytest.raises(ParameterError):
        exhaustion_sweep(GraphFamily.lattice(1), 1.0, FLAT, [])
    with pytest.raises(ParameterError):
        exhaustion_sweep(GraphFamily.lattice(1), 1.0, FLAT, [4, 2])
    with pytest.raises(ParameterError):
        exhaustion_sweep(GraphFamily.lattice(1), 1.0, FLAT, [2], boundary_value=0.0)


def test_parallel_sweep_matches_serial():
    pot = Potential(1.0, 2.0, 2.0)
    a = exhaustion_sweep(GraphFamily.lattice(2), 0.5, pot, [3, 6, 9])
    b = exhaustion_sweep(GraphFamily.lattice(2), 0.5, pot, [3, 6, 9], workers=3)
    assert np.array_equal(a.center_values, b.center_values)


def test_sweep_regime():
    res = exhaustion_sweep(GraphFamily.lattice(1), "intrinsic", Potential(1.0, 2.0, 2.0), [5, 10])
    reg = res.regime(beta=1.0)
    assert reg["energy_regime"] and not reg["duality_regime"]
    assert reg["p_min_energy"] >= 2
