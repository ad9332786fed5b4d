import time
from pathlib import Path

import numpy as np
import pytest

from taylor_rhc import (
    SweepSpec,
    TerminalPenalty,
    paper_system,
    reference_solution,
    run_sweep,
    solve_are,
    solve_cubic_term,
)
from taylor_rhc.experiments import read_table

DATA = Path(__file__).parent / "data"
SEED = 1234

_acceptance_key = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_acceptance_key] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance_key, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion; returns the pass flag."""
    log = request.config.stash[_acceptance_key]

    def record(number, title, passed, detail):
        log.append(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}: {detail}")
        return passed

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def example_sys():
    return paper_system()


@pytest.fixture(scope="session")
def example_ric(example_sys):
    return solve_are(example_sys)


@pytest.fixture(scope="session")
def example_T3(example_sys, example_ric):
    return solve_cubic_term(example_sys, example_ric)


@pytest.fixture(scope="session")
def example_phis(example_ric, example_T3):
    return {
        1: TerminalPenalty.zero(),
        2: TerminalPenalty.taylor2(example_ric),
        3: TerminalPenalty.taylor3(example_ric, example_T3),
    }


@pytest.fixture(scope="session")
def linear_sys(example_sys):
    return example_sys.replace(N=np.zeros((2, 2)))


@pytest.fixture(scope="session")
def example_ref(example_sys):
    return reference_solution(example_sys, [1.0, 1.0], 5.0)


@pytest.fixture(scope="session")
def example_sweep_timed(example_sys):
    """The full three-table sweep on the two-state example and its wall time."""
    t0 = time.perf_counter()
    tables = run_sweep(SweepSpec(system=example_sys, y0=[1.0, 1.0]))
    return tables, time.perf_counter() - t0


@pytest.fixture(scope="session")
def example_sweep(example_sweep_timed):
    return example_sweep_timed[0]


@pytest.fixture(scope="session")
def lq_sweep_timed(linear_sys):
    t0 = time.perf_counter()
    table = run_sweep(SweepSpec(system=linear_sys, y0=[1.0, 1.0], penalties=(2,)))[2]
    return table, time.perf_counter() - t0


@pytest.fixture(scope="session")
def published_tables():
    out = {}
    for k in (1, 2, 3):
        out[("error", k)] = read_table(DATA / f"published_error_k{k}.csv", "error", k)
        out[("rho", k)] = read_table(DATA / f"published_rho_k{k}.csv", "rho", k)
    return out
