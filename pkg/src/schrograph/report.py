"""Check reports: worst-slack summaries of pointwise inequalities and identities."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

CSV_COLUMNS = ("check", "pass", "worst_margin", "worst_location", "tolerance", "params")


def fmt(x) -> str:
    """Stable numeric formatting used in every emitted file (9 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x != x:
            return ""
        if x == 0:
            return "0"
        return format(x, ".9g")
    return str(x)


@dataclass(frozen=True)
class Tolerance:
    """Pass rule: slack >= -(abs + rel * scale), scale being the magnitude of both sides."""

    abs: float = 1e-12
    rel: float = 1e-10

    def __str__(self):
        return f"abs={self.abs:g} rel={self.rel:g}"


DEFAULT_TOL = Tolerance()


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    worst_location: str
    tolerance: float
    params: Dict[str, object] = field(default_factory=dict)
    details: Dict[str, object] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    hypothesis_failed: bool = False

    @classmethod
    def hypothesis_failure(cls, name: str, message: str, params=None) -> "CheckReport":
        return cls(name, False, float("nan"), f"hypothesis: {message}", float("nan"),
                   dict(params or {}), hypothesis_failed=True)

    @property
    def status(self) -> str:
        if self.hypothesis_failed:
            return "hypothesis_failed"
        return fmt(bool(self.passed))

    def __bool__(self):
        return bool(self.passed)

    def param_string(self) -> str:
        return ";".join(f"{k}={fmt(v)}" for k, v in sorted(self.params.items()))

    def csv_row(self) -> Tuple[str, ...]:
        return (
            self.name,
            self.status,
            fmt(self.worst_margin),
            self.worst_location,
            fmt(self.tolerance),
            self.param_string(),
        )

    def to_text(self) -> str:
        """Flat ``key=value`` block, one field per line."""
        lines = [
            f"check={self.name}",
            f"pass={self.status}",
            f"worst_margin={fmt(self.worst_margin)}",
            f"worst_location={self.worst_location}",
            f"tolerance={fmt(self.tolerance)}",
        ]
        lines += [f"param.{k}={fmt(v)}" for k, v in sorted(self.params.items())]
        lines += [f"detail.{k}={fmt(v)}" for k, v in sorted(self.details.items())]
        lines += [f"note={n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def reports_to_csv(reports: Sequence[CheckReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


# one group of pointwise comparisons: (label, margin, scale, locate)
Part = Tuple[str, np.ndarray, np.ndarray, Callable[[int], str]]


def summarize(name: str, parts: Sequence[Part], tol: Tolerance = DEFAULT_TOL, params=None,
              details=None, notes=None) -> CheckReport:
    """Collapse groups of pointwise slacks into one report.

    A point passes when ``margin >= -(tol.abs + tol.rel * scale)``. If every
    point passes, the reported location is the one with the smallest raw
    margin; otherwise it is the one exceeding its allowance by the most.
    Ties go to the first (lowest-index) point.
    """
    best = None  # (key, margin, allowance, location)
    all_ok = True
    for label, margin, scale, locate in parts:
        margin = np.atleast_1d(np.asarray(margin, dtype=float))
        if margin.size == 0:
            continue
        allowance = tol.abs + tol.rel * np.atleast_1d(np.asarray(scale, dtype=float))
        allowance = np.broadcast_to(allowance, margin.shape)
        excess = margin + allowance
        ok = bool(np.all(excess >= 0))
        all_ok &= ok
        i = int(np.argmin(margin)) if ok else int(np.argmin(excess))
        cand = (ok, float(margin[i]) if ok else float(excess[i]), float(margin[i]),
                float(allowance[i]), f"{label}:{locate(i)}" if label else locate(i))
        if best is None or _worse(cand, best):
            best = cand
    if best is None:
        return CheckReport(name, True, 0.0, "", tol.abs, dict(params or {}), dict(details or {}),
                           list(notes or []))
    _, _, margin, allowance, loc = best
    return CheckReport(name, all_ok, margin, loc, allowance, dict(params or {}),
                       dict(details or {}), list(notes or []))


def _worse(a, b) -> bool:
    # failing beats passing; among equals compare the ranking key
    if a[0] != b[0]:
        return not a[0]
    return a[1] < b[1]


def index_locator(ids) -> Callable[[int], str]:
    ids = np.asarray(ids)
    return lambda i: str(int(ids[i]))


def edge_locator(src, dst) -> Callable[[int], str]:
    src = np.asarray(src)
    dst = np.asarray(dst)
    return lambda i: f"{int(src[i])}-{int(dst[i])}"
