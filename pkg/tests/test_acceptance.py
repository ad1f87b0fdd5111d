"""Acceptance criteria 1-9. A verdict line per criterion is printed in the terminal summary."""
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import section
from oracles import solve_exact
from schrograph import verifier as vf
from schrograph.calculus import QUARTIC, check_calculus_identities
from schrograph.graph import GraphFamily, build_section
from schrograph.metric import scaled_hop_metric
from schrograph.report import Tolerance
from schrograph.solver import DirichletProblem, exhaustion_sweep, solve_dirichlet, solve_dirichlet_dense
from schrograph.spaces import Potential, PowerWeight

LINE, PLANE, TREE = GraphFamily.lattice(1), GraphFamily.lattice(2), GraphFamily.rooted_tree(2)

# Frozen from an independent sparse direct sweep (tests/oracles.solve_sparse) on the
# plane, intrinsic metric, c0=1, k=2, radii 1..60: u_60 = 0.402626 (alpha 3), 1.705e-5 (alpha 1).
THETA_3 = 0.40
THETA_1 = 1e-3


# -- 1 ------------------------------------------------------------------------

def test_calculus_identity_suite(record_criterion):
    start = time.perf_counter()
    worst = 0.0
    for fam, hops in [(LINE, 10), (PLANE, 5), (TREE, 6)]:
        g = build_section(fam, hops)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            f, h = rng.uniform(-1, 1, g.n), rng.uniform(-1, 1, g.n)
            r = check_calculus_identities(g, f, h, QUARTIC)
            assert r.passed, r.to_text()
            worst = max(worst, max(r.details.values()))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5
    record_criterion(1, ok, f"max relative violation {worst:.2e} (<= 1e-10), {elapsed:.2f}s (< 5s)")
    assert worst <= 1e-10
    assert elapsed < 5


# -- 2 ------------------------------------------------------------------------

def _grid_reports(g, m):
    reps = []
    s = m.jump
    for beta in (0.5, 1, 2, 5):
        for k in (1.5, 2, 10):
            assert k > s
            w = PowerWeight(beta, k)
            reps.append(vf.check_weight_increment(g, m, w))
            for alpha in (1, 2):
                pot = Potential(1.0, k, alpha)
                reps.append(vf.check_supersolution_bound(g, m, w, pot, 2.0))
                reps.append(vf.check_weight_laplacian_bound(g, m, w, pot, 1.0))
    for delta in (0.25, 0.4):
        lo = vf.min_cutoff_radius(s, delta)
        for R in (1.01 * lo, vf.max_cutoff_radius(m), m.covered_radius):
            if R > lo:
                reps.append(vf.check_cutoff_gradient(g, m, vf.build_cutoff(m, R, delta)))
    return reps


def test_inequality_suite(record_criterion):
    start = time.perf_counter()
    failures, total = [], 0
    for fam, hops in [(LINE, 50), (PLANE, 25), (TREE, 10)]:
        g, m = section(fam, hops)
        for r in _grid_reports(g, m):
            total += 1
            if not r.passed:
                failures.append(f"{fam.describe()} {r.name} {r.param_string()}")
    elapsed = time.perf_counter() - start
    record_criterion(2, not failures and elapsed < 60,
                     f"{total - len(failures)}/{total} reports pass, {elapsed:.2f}s (< 60s)")
    assert not failures, failures
    assert elapsed < 60


# -- 3 ------------------------------------------------------------------------

SOLUTION_SECTIONS = [(LINE, 50), (PLANE, 25), (TREE, 12)]


@pytest.mark.parametrize("fam,hops", SOLUTION_SECTIONS, ids=["line", "plane", "tree"])
@pytest.mark.parametrize("alpha", [1, 2])
def test_solution_dependent_suite(record_criterion, fam, hops, alpha):
    g, m = section(fam, hops)
    beta, k, c0, delta = 1.0, 2.0, 4.0, 0.4
    w, pot = PowerWeight(beta, k), Potential(c0, k, alpha)
    th = vf.thresholds(beta, k, m.jump, c0, m.intrinsic_bound(1))
    R = vf.max_cutoff_radius(m)
    assert R > vf.min_cutoff_radius(m.jump, delta)
    cut = vf.build_cutoff(m, R, delta)
    sol = solve_dirichlet(DirichletProblem(g, m, pot, 1.0))
    tol = Tolerance(abs=1e-12, rel=1e-10)
    reps = []
    for p in (2, 4):
        assert th.energy_admits(p)
        reps.append(vf.check_a_priori_estimate(g, m, w, pot, p, cut, sol, tol))
    for p in (1, 2):
        assert th.duality_admits(p)
        reps.append(vf.check_adjoint_inequality(g, m, pot, p, sol, w=w, cutoff=cut, tol=tol))
    bad = [r.name for r in reps if not r.passed]
    record_criterion(3, not bad, f"{fam.describe()} alpha={alpha}: {len(reps) - len(bad)}/{len(reps)}")
    assert not bad


# -- 4 ------------------------------------------------------------------------

SMALL_SECTIONS = [(LINE, h) for h in (2, 5, 10, 25)] + [(PLANE, h) for h in (1, 2, 3, 4, 5)] + \
                 [(GraphFamily.lattice(3), 2), (TREE, 3), (TREE, 5), (GraphFamily.rooted_tree(3), 3)]


def test_solver_correctness(record_criterion):
    worst_gap, worst_res = 0.0, 0.0
    for fam, hops in SMALL_SECTIONS:
        g, m = section(fam, hops)
        assert g.interior.sum() <= 50
        for alpha in (0.0, 1.0, 2.0, 3.0):
            for boundary in (1.0, 2.5):
                pb = DirichletProblem(g, m, Potential(1.0, 2.0, alpha), boundary)
                sol = solve_dirichlet(pb)
                worst_res = max(worst_res, sol.residual_inf / (1 + pb.boundary_sup))
                worst_gap = max(worst_gap, float(np.max(np.abs(sol.values - solve_dirichlet_dense(pb)))))
    # three-vertex path, V(0) = 1
    g = build_section(GraphFamily.weighted_path(), 1)
    u3 = solve_dirichlet(DirichletProblem(g, scaled_hop_metric(g, 1.0), Potential(1.0, 2.0, 0.0))).values[1]
    # five-vertex line, V = 1: exact rational oracle
    g = build_section(LINE, 2)
    exact = solve_exact(5, {tuple(map(int, e)): Fraction(1) for e in g.edges}, [Fraction(1)] * 5,
                        [Fraction(1)] * 5, [1, 2, 3], {0: Fraction(1), 4: Fraction(1)})
    u5 = solve_dirichlet(DirichletProblem(g, scaled_hop_metric(g, 1.0), Potential(1.0, 2.0, 0.0))).values[2]
    ok = (worst_res <= 1e-10 and worst_gap <= 1e-10 and abs(u3 - 2 / 3) <= 1e-12
          and exact[2] == Fraction(2, 7) and abs(u5 - 2 / 7) <= 1e-12)
    record_criterion(4, ok, f"residual/(1+|g|) <= {worst_res:.1e}, cg-vs-dense {worst_gap:.1e}, "
                            f"u(0)=2/3 err {abs(u3 - 2 / 3):.1e}, u(0)=2/7 (oracle) err {abs(u5 - 2 / 7):.1e}")
    assert worst_res <= 1e-10 and worst_gap <= 1e-10
    assert abs(u3 - 2 / 3) <= 1e-12
    assert exact[2] == Fraction(2, 7)
    assert abs(u5 - 2 / 7) <= 1e-12


# -- 5 ------------------------------------------------------------------------

@pytest.mark.parametrize("fam,radii", [
    (LINE, [2, 5, 10, 20, 40]), (PLANE, [2, 4, 8, 16, 24]), (TREE, [2, 4, 6, 8, 10]),
], ids=["line", "plane", "tree"])
@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 3.0])
def test_maximum_principle_and_monotonicity(record_criterion, fam, radii, alpha):
    boundary = 1.0
    res = exhaustion_sweep(fam, "intrinsic", Potential(1.0, 2.0, alpha), radii, boundary, keep_solutions=True)
    bounded = all(p.solution.values.min() >= 0 and p.solution.values.max() <= boundary for p in res.points)
    mono = res.is_monotone(slack=1e-12)
    residual_ok = all(p.residual <= 1e-10 * (1 + boundary) for p in res.points)
    record_criterion(5, bounded and mono and residual_ok, f"{fam.describe()} alpha={alpha:g}")
    assert bounded and mono and residual_ok


# -- 6 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def plane_sweeps():
    radii = list(range(1, 61))
    start = time.perf_counter()
    out = {a: exhaustion_sweep(PLANE, "intrinsic", Potential(1.0, 2.0, a), radii, 1.0) for a in (1.0, 3.0)}
    return out, time.perf_counter() - start


def test_sharpness_fast_decay_stabilizes(record_criterion, plane_sweeps):
    sweeps, elapsed = plane_sweeps
    res = sweeps[3.0]
    change = float(res.relative_changes()[-1])
    limit = res.limit_estimate
    ok = res.is_monotone() and change < 1e-3 and limit >= THETA_3 and elapsed < 120
    record_criterion(6, ok, f"alpha=3: u_60={limit:.6f} (theta3={THETA_3}), last relative change "
                            f"{change:.2e} (needs < 1e-3), sweeps {elapsed:.1f}s")
    assert res.is_monotone()
    assert limit >= THETA_3
    assert change < 1e-3


def test_sharpness_slow_decay_vanishes(record_criterion, plane_sweeps):
    sweeps, elapsed = plane_sweeps
    res = sweeps[1.0]
    final = res.limit_estimate
    ok = res.is_monotone() and final <= THETA_1 < THETA_3 / 10 and elapsed < 120
    record_criterion(6, ok, f"alpha=1: u_60={final:.3e} (<= theta1={THETA_1:g} < theta3/10)")
    assert res.is_monotone()
    assert final <= THETA_1 < THETA_3 / 10
    assert elapsed < 120


# -- 7 ------------------------------------------------------------------------

def test_threshold_regression(record_criterion):
    e = vf.p_threshold_energy(1, 2, 1, 1)
    d = vf.p_threshold_duality(1, 2, 1, 1, np.sqrt(2))
    ok = abs(e - 8) <= 1e-12 and abs(d - 4 * np.sqrt(2)) <= 1e-12
    record_criterion(7, ok, f"energy {float(e)!r} (8), duality {float(d)!r} (4*sqrt(2))")
    assert abs(e - 8) <= 1e-12
    assert abs(d - 4 * np.sqrt(2)) <= 1e-12


# -- 8 ------------------------------------------------------------------------

@pytest.mark.parametrize("fam,hops", [(LINE, 50), (PLANE, 25)], ids=["line", "plane"])
@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_boundary_term_decay(record_criterion, fam, hops, p):
    g, m = section(fam, hops)
    c, delta = m.jump, 0.25
    pot, w = Potential(1.0, 2.0, 1.0), PowerWeight(1.0, 2.0)
    sol = solve_dirichlet(DirichletProblem(g, m, pot, 1.0))
    radii = [5 * c, 10 * c, 20 * c]
    reps = vf.boundary_term_sweep(g, m, w, p, sol, radii, delta)
    ratios = [r.details[k] for r in reps for k in ("ratio_J1", "ratio_J2")]
    scaled = {k: [r.details[k] * R for r, R in zip(reps, radii)] for k in ("bound_J1", "bound_J2")}
    spread = max(abs(v / vals[0] - 1) for vals in scaled.values() for v in vals)
    ok = all(r.passed for r in reps) and max(ratios) <= 1 and spread <= 1e-10
    record_criterion(8, ok, f"{fam.describe()} p={p:g}: max |J|/bound {max(ratios):.3f}, "
                            f"R*bound spread {spread:.1e}")
    assert max(ratios) <= 1
    assert spread <= 1e-10


# -- 9 ------------------------------------------------------------------------

def test_cli_determinism(record_criterion, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[family]\nkind = lattice\ndim = 2\nradius = 12\n"
                   "[weight]\nbeta = 1\nk = 2\n[potential]\nc0 = 1\nalpha = 2\n"
                   "[sweep]\nradii = 4 8 12\nalphas = 1 3\n")
    env = dict(os.environ, GSL_SEED="20240601")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        files = {}
        for cmd in ("verify", "solve", "sweep"):
            proc = subprocess.run([sys.executable, "-m", "schrograph", cmd, "--config", str(cfg),
                                   "--out", str(out)], env=env, capture_output=True)
            assert proc.returncode == 0, proc.stderr.decode()
        for name in ("verify.csv", "solve.csv", "sweep.csv"):
            files[name] = (out / name).read_bytes()
        outputs.append(files)
    same = outputs[0] == outputs[1]
    record_criterion(9, same, "verify.csv, solve.csv, sweep.csv byte-identical across two runs")
    assert same
