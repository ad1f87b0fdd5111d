"""Command-line front end: thresholds, verification suites, solves and sweeps."""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import verifier as vf
from .calculus import QUARTIC, check_calculus_identities
from .errors import HypothesisError, ParameterError, SchrographError
from .graph import GraphFamily, WeightedGraph, build_section
from .metric import PseudoMetric, intrinsic_scaling, scaled_hop_metric
from .report import CheckReport, Tolerance, fmt, reports_to_csv, summarize
from .solver import DirichletProblem, Solution, exhaustion_sweep, solve_dirichlet
from .spaces import Potential, PowerWeight
from .svg import line_chart

log = logging.getLogger("schrograph")

SEED_ENV = "GSL_SEED"

CHECKS = (
    "metric_certificate",
    "c1_certificate",
    "calculus_identities",
    "weight_increment",
    "supersolution_bound",
    "cutoff_gradient",
    "dirichlet_solve",
    "monotone_pair",
    "a_priori_estimate",
    "weight_laplacian_bound",
    "adjoint_inequality",
    "boundary_terms",
)
_NEEDS_SOLUTION = {"dirichlet_solve", "a_priori_estimate", "adjoint_inequality", "boundary_terms"}
_NEEDS_CUTOFF = {"cutoff_gradient", "monotone_pair", "a_priori_estimate", "adjoint_inequality",
                 "boundary_terms"}


@dataclass
class RunConfig:
    family: str = "lattice"
    dim: int = 1
    branching: int = 2
    radius: int = 20
    scaling: Union[str, float] = "intrinsic"
    beta: float = 1.0
    k: float = 2.0
    c0: float = 1.0
    alpha: float = 2.0
    p: Optional[float] = None
    delta: float = 0.4
    cutoff_radius: Optional[float] = None
    checks: Tuple[str, ...] = CHECKS
    tol: float = 1e-10
    boundary: float = 1.0
    radii: Tuple[int, ...] = (10, 20, 40)
    alphas: Tuple[float, ...] = (1.0, 3.0)
    jump: Optional[float] = None
    intrinsic_bound: Optional[float] = None
    out: str = "."
    workers: int = 1
    sources: Dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    def where(self, name: str) -> str:
        return self.sources.get(name, f"--{name.replace('_', '-')}")

    def validate(self) -> "RunConfig":
        def need(ok, name, what):
            if not ok:
                raise ParameterError(f"{self.where(name)}: {what} (got {getattr(self, name)!r})")

        need(self.family in ("lattice", "tree", "path"), "family", "must be lattice, tree or path")
        need(self.dim >= 1, "dim", "must be >= 1")
        need(self.branching >= 1, "branching", "must be >= 1")
        need(self.radius >= 1, "radius", "must be >= 1")
        need(self.scaling == "intrinsic" or (np.isfinite(self.scaling) and self.scaling > 0),
             "scaling", "must be 'intrinsic' or a positive number")
        need(np.isfinite(self.beta) and self.beta > 0, "beta", "must be positive")
        need(np.isfinite(self.k) and self.k > 0, "k", "must be positive")
        need(np.isfinite(self.c0) and self.c0 > 0, "c0", "must be positive")
        need(np.isfinite(self.alpha) and self.alpha >= 0, "alpha", "must be nonnegative")
        need(self.p is None or self.p >= 1, "p", "must be >= 1")
        need(0 < self.delta < 0.5, "delta", "must lie in (0, 1/2)")
        need(self.cutoff_radius is None or self.cutoff_radius > 0, "cutoff_radius", "must be positive")
        need(self.tol > 0, "tol", "must be positive")
        need(np.isfinite(self.boundary), "boundary", "must be finite")
        unknown = [c for c in self.checks if c not in CHECKS]
        need(not unknown and self.checks, "checks", f"must be a nonempty subset of {','.join(CHECKS)}")
        need(self.jump is None or self.jump >= 0, "jump", "must be nonnegative")
        need(self.intrinsic_bound is None or self.intrinsic_bound > 0, "intrinsic_bound", "must be positive")
        need(self.workers >= 1, "workers", "must be >= 1")
        return self

    # -- derived objects --------------------------------------------------

    def graph_family(self) -> GraphFamily:
        if self.family == "lattice":
            return GraphFamily.lattice(self.dim)
        if self.family == "tree":
            return GraphFamily.rooted_tree(self.branching)
        return GraphFamily.weighted_path()

    def weight(self) -> PowerWeight:
        return PowerWeight(self.beta, self.k)

    def potential(self, alpha: Optional[float] = None) -> Potential:
        return Potential(self.c0, self.k, self.alpha if alpha is None else alpha)

    def section(self) -> Tuple[WeightedGraph, PseudoMetric]:
        g = build_section(self.graph_family(), self.radius)
        c = intrinsic_scaling(g) if self.scaling == "intrinsic" else float(self.scaling)
        return g, scaled_hop_metric(g, c)


# -- config file ------------------------------------------------------------

_KEYS = {
    "family": {"kind": "family", "dim": "dim", "branching": "branching", "radius": "radius"},
    "metric": {"scaling": "scaling"},
    "weight": {"beta": "beta", "k": "k"},
    "potential": {"c0": "c0", "alpha": "alpha", "k": "k"},
    "verify": {"p": "p", "delta": "delta", "cutoff_radius": "cutoff_radius", "checks": "checks"},
    "solver": {"tol": "tol", "boundary": "boundary"},
    "sweep": {"radii": "radii", "alphas": "alphas", "workers": "workers"},
    "thresholds": {"jump": "jump", "intrinsic_bound": "intrinsic_bound"},
    "output": {"dir": "out"},
}


def _int_list(text: str) -> Tuple[int, ...]:
    return tuple(int(t) for t in text.replace(",", " ").split())


def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _scaling(text: str) -> Union[str, float]:
    text = text.strip()
    return "intrinsic" if text == "intrinsic" else float(text)


def _opt_float(text: str) -> Optional[float]:
    text = text.strip()
    return None if text in ("", "auto") else float(text)


def _names(text: str) -> Tuple[str, ...]:
    text = text.strip()
    if text in ("", "all"):
        return CHECKS
    return tuple(t.strip() for t in text.split(",") if t.strip())


PARSERS: Dict[str, Callable[[str], object]] = {
    "family": str.strip, "dim": int, "branching": int, "radius": int, "scaling": _scaling,
    "beta": float, "k": float, "c0": float, "alpha": float, "p": _opt_float, "delta": float,
    "cutoff_radius": _opt_float, "checks": _names, "tol": float, "boundary": float,
    "radii": _int_list, "alphas": _float_list, "jump": _opt_float, "intrinsic_bound": _opt_float,
    "out": str.strip, "workers": int,
}


def _key_lines(path: str) -> Dict[Tuple[str, str], int]:
    """Line number of each (section, key) for error messages."""
    out, section = {}, None
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                section = m.group(1).strip()
                continue
            m = re.match(r"([^\s=:#;][^=:]*?)\s*[=:]", line)
            if m and section is not None:
                out.setdefault((section, m.group(1).strip().lower()), n)
    return out


def load_config(path: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Read a sectioned ``key = value`` file on top of ``base`` (defaults if None)."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ParameterError(f"{path}: {exc.message}") from exc
    lines = _key_lines(path)
    cfg = replace(base) if base is not None else RunConfig()
    cfg.sources = dict(cfg.sources)
    seen: Dict[str, str] = {}
    for section in parser.sections():
        if section not in _KEYS:
            raise ParameterError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            loc = f"{path}:{lines.get((section, key), '?')}: [{section}] {key}"
            name = _KEYS[section].get(key)
            if name is None:
                raise ParameterError(f"{loc}: unknown key")
            try:
                value = PARSERS[name](raw)
            except ValueError:
                raise ParameterError(f"{loc}: cannot parse {raw!r}") from None
            if name in seen:
                if name == "k" and value == cfg.k:
                    continue  # weight and potential may both state the shared shift
                raise ParameterError(f"{loc}: conflicts with {seen[name]}")
            setattr(cfg, name, value)
            cfg.sources[name] = loc
            seen[name] = loc
    return cfg


# -- output -----------------------------------------------------------------

def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


# -- commands ---------------------------------------------------------------

def cmd_thresholds(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if cfg.jump is not None and cfg.intrinsic_bound is not None:
        s, C0 = cfg.jump, cfg.intrinsic_bound
    else:
        _, metric = cfg.section()
        s = metric.jump if cfg.jump is None else cfg.jump
        C0 = metric.intrinsic_bound(1.0) if cfg.intrinsic_bound is None else cfg.intrinsic_bound
    th = vf.thresholds(cfg.beta, cfg.k, s, cfg.c0, C0)
    rows = [
        ("energy_threshold", th.energy, "p >= max(2, value)", "false"),
        ("energy_p_min", th.energy_p_min, "", "false"),
        ("duality_threshold", th.duality, "p >= 1 and p > value", "true"),
        ("duality_p_floor", th.duality_p_floor, "", "true"),
        ("C1", vf.c1_constant(cfg.beta, cfg.k, s), "", ""),
        ("C2", vf.c2_constant(cfg.beta, cfg.k, s), "", ""),
        ("C3", vf.c3_constant(cfg.beta, cfg.k, s), "", ""),
        ("C0", C0, "", ""),
        ("s", s, "", ""),
    ]
    for name, value, floor, strict in rows:
        extra = f" ({floor}; strict={strict})" if floor else ""
        print(f"{name}: {fmt(float(value))}{extra}", file=stdout)
    text = _csv(("quantity", "value", "admissible", "strict"),
                [(n, fmt(float(v)), f, st) for n, v, f, st in rows])
    write_atomic(os.path.join(cfg.out, "thresholds.csv"), text)
    return 0


def _metric_report(g, metric) -> CheckReport:
    cert = vf.certify_metric(g, metric)
    params = {"s": cert.jump}
    if not cert.intrinsic:
        return CheckReport.hypothesis_failure(
            "metric_certificate", f"q=2 bound {fmt(cert.two_intrinsic)} exceeds 1", params)
    r = summarize("metric_certificate",
                  [("q2", 1.0 - cert.two_intrinsic, 1.0, lambda i: "interior")],
                  Tolerance(abs=0.0, rel=vf.INTRINSIC_SLACK), params=params)
    r.details.update({"one_intrinsic": cert.one_intrinsic, "two_intrinsic": cert.two_intrinsic})
    return r


def _solve_report(sol: Solution) -> CheckReport:
    r = summarize("dirichlet_solve", [("", sol.residual_bound - sol.residual_inf, 0.0,
                                       lambda i: "interior")], Tolerance(abs=0.0, rel=0.0),
                  params={"method": sol.method, "iterations": sol.solver_iterations})
    r.details["residual_inf"] = sol.residual_inf
    return r


def run_verify(cfg: RunConfig) -> List[CheckReport]:
    """Run the selected checks in hypothesis order; hypothesis failures become rows."""
    g, metric = cfg.section()
    s = metric.jump
    w, pot = cfg.weight(), cfg.potential()
    C0 = metric.intrinsic_bound(1.0)
    th = vf.thresholds(cfg.beta, cfg.k, s, cfg.c0, C0)
    p = vf.suggested_p(th) if cfg.p is None else cfg.p
    tol = Tolerance(rel=cfg.tol)
    wanted = set(cfg.checks)
    reports: List[CheckReport] = []

    cutoff = None
    if wanted & _NEEDS_CUTOFF:
        R = vf.max_cutoff_radius(metric) if cfg.cutoff_radius is None else cfg.cutoff_radius
        cutoff = vf.build_cutoff(metric, R, cfg.delta)
    sol = None
    if wanted & _NEEDS_SOLUTION:
        sol = solve_dirichlet(DirichletProblem(g, metric, pot, cfg.boundary), cfg.tol)

    def run(name, fn):
        if name not in wanted:
            return
        try:
            out = fn()
        except HypothesisError as exc:
            reports.append(CheckReport.hypothesis_failure(name, str(exc)))
            return
        reports.extend(out if isinstance(out, list) else [out])

    def identities():
        rng = np.random.default_rng(_seed())
        f, h = rng.uniform(-1, 1, g.n), rng.uniform(-1, 1, g.n)
        r = check_calculus_identities(g, f, h, QUARTIC, tol)
        r.params["seed"] = _seed()
        return r

    run("metric_certificate", lambda: _metric_report(g, metric))
    run("c1_certificate", lambda: vf.shift_ratio_certificate(cfg.beta, cfg.k, s))
    run("calculus_identities", identities)
    run("weight_increment", lambda: vf.check_weight_increment(g, metric, w, tol))
    run("supersolution_bound", lambda: vf.check_supersolution_bound(g, metric, w, pot, p, tol))
    run("cutoff_gradient", lambda: vf.check_cutoff_gradient(g, metric, cutoff, tol))
    run("dirichlet_solve", lambda: _solve_report(sol))
    run("monotone_pair", lambda: vf.check_monotone_pair(g, metric, w, cutoff, tol))
    run("a_priori_estimate", lambda: vf.check_a_priori_estimate(g, metric, w, pot, p, cutoff, sol, tol))
    run("weight_laplacian_bound", lambda: vf.check_weight_laplacian_bound(g, metric, w, pot, p, tol))
    run("adjoint_inequality",
        lambda: vf.check_adjoint_inequality(g, metric, pot, p, sol, w=w, cutoff=cutoff, tol=tol))
    run("boundary_terms", lambda: vf.boundary_term_sweep(
        g, metric, w, p, sol, vf.boundary_sweep_radii(cutoff.R, s, cfg.delta), cfg.delta, tol))
    return reports


def verify_exit_code(reports: Sequence[CheckReport]) -> int:
    if any(r.hypothesis_failed for r in reports):
        return HypothesisError.exit_code
    if not all(r.passed for r in reports):
        return 4
    return 0


def cmd_verify(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    reports = run_verify(cfg)
    write_atomic(os.path.join(cfg.out, "verify.csv"), reports_to_csv(reports))
    for r in reports:
        print(f"{r.name}: {r.status} (worst_margin={fmt(r.worst_margin)} at {r.worst_location})",
              file=stdout)
    code = verify_exit_code(reports)
    print(f"exit={code}", file=stdout)
    return code


def cmd_solve(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    g, metric = cfg.section()
    sol = solve_dirichlet(DirichletProblem(g, metric, cfg.potential(), cfg.boundary), cfg.tol)
    d = metric.dist_to_base
    rows = [(str(x), g.vertex_label(x), fmt(float(d[x])), fmt(float(sol.values[x]))) for x in range(g.n)]
    text = _csv(("vertex", "coords", "dist", "u"), rows)
    text += (f"# residual_inf={fmt(sol.residual_inf)} iterations={sol.solver_iterations} "
             f"method={sol.method}\n")
    write_atomic(os.path.join(cfg.out, "solve.csv"), text)
    print(f"u(x0)={float(sol.values[g.base]):.6f} residual_inf={fmt(sol.residual_inf)}", file=stdout)
    return 0


def cmd_sweep(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if not cfg.alphas:
        raise ParameterError(f"{cfg.where('alphas')}: alpha list is empty")
    fam = cfg.graph_family()

    def one(alpha):
        return exhaustion_sweep(fam, cfg.scaling, cfg.potential(alpha), cfg.radii, cfg.boundary, cfg.tol)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, cfg.alphas))
    else:
        results = [one(a) for a in cfg.alphas]
    rows, series = [], {}
    for alpha, res in zip(cfg.alphas, results):
        for pt, delta in zip(res.points, res.deltas()):
            rows.append((fmt(float(alpha)), str(pt.radius), fmt(pt.center_value), fmt(pt.residual),
                         "" if delta is None else fmt(delta)))
        series[f"alpha={fmt(float(alpha))}"] = list(zip(res.radii, res.center_values.tolist()))
        print(f"alpha={fmt(float(alpha))}: u_R(x0)={fmt(res.limit_estimate)} at R={res.radii[-1]} "
              f"monotone={fmt(res.is_monotone())}", file=stdout)
    write_atomic(os.path.join(cfg.out, "sweep.csv"),
                 _csv(("alpha", "R", "u_R(x0)", "residual", "delta_from_previous"), rows))
    write_atomic(os.path.join(cfg.out, "sweep.svg"),
                 line_chart(series, title=f"u_R(x0) on {fam.describe()}", xlabel="hop radius R",
                            ylabel="u_R(x0)"))
    return 0


COMMANDS = {"thresholds": cmd_thresholds, "verify": cmd_verify, "solve": cmd_solve, "sweep": cmd_sweep}


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="sectioned key = value file; flags override it")
    a("--out", help="output directory (default: current)")
    a("--family", choices=("lattice", "tree", "path"))
    a("--dim", type=int, help="lattice dimension")
    a("--branching", type=int, help="tree branching number")
    a("--radius", type=int, help="hop radius of the section")
    a("--scaling", type=_scaling, help="'intrinsic' or a positive metric scale")
    a("--beta", type=float)
    a("--k", type=float, help="shift shared by weight and potential")
    a("--c0", type=float)
    a("--alpha", type=float)
    a("--p", type=_opt_float, help="exponent; default twice the energy floor")
    a("--delta", type=float)
    a("--cutoff-radius", type=_opt_float, help="default: largest radius supported in the section")
    a("--tol", type=float)
    a("--boundary", type=float, help="constant boundary value")
    a("--checks", type=_names, help="comma-separated subset of checks")
    a("--radii", type=_int_list)
    a("--alphas", type=_float_list)
    a("--jump", type=_opt_float, help="override the jump size s")
    a("--intrinsic-bound", type=_opt_float, help="override the 1-intrinsic bound C0")
    a("--workers", type=int)
    a("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="schrograph", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "thresholds": "print uniqueness thresholds and constants",
        "verify": "run the verification suite, one CSV row per check",
        "solve": "solve the Dirichlet problem on one section",
        "sweep": "track u_R(x0) over growing sections for several decay rates",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = load_config(ns.config) if ns.config else RunConfig()
    for f in fields(RunConfig):
        if f.name == "sources":
            continue
        value = getattr(ns, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
            cfg.sources[f.name] = f"--{f.name.replace('_', '-')}"
    return cfg.validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        return COMMANDS[ns.command](cfg)
    except SchrographError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
