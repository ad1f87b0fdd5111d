import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from schrograph.graph import GraphFamily, build_section  # noqa: E402
from schrograph.metric import intrinsic_scaling, scaled_hop_metric  # noqa: E402

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store one verdict line per acceptance criterion for the terminal summary."""

    def record(number, passed, summary):
        prev = ACCEPTANCE.get(number)
        ok = passed and (prev is None or prev[0])
        text = summary if prev is None else f"{prev[1]}; {summary}"
        ACCEPTANCE[number] = (ok, text)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {text}")


def section(family, hops, scaling="intrinsic"):
    g = build_section(family, hops)
    c = intrinsic_scaling(g) if scaling == "intrinsic" else scaling
    return g, scaled_hop_metric(g, c)


@pytest.fixture(scope="session")
def line50():
    return section(GraphFamily.lattice(1), 50)


@pytest.fixture(scope="session")
def plane25():
    return section(GraphFamily.lattice(2), 25)


@pytest.fixture(scope="session")
def tree10():
    return section(GraphFamily.rooted_tree(2), 10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
