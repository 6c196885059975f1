"""Shared fixtures: grid domains and the two heavy ladder sweeps.

The acceptance criteria reuse one hyperdiffusive disk ladder and one
constant-q square ladder at h=1/64; both are session-scoped so the
suite pays for each sweep once.
"""

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plaplab import (
    Disk,
    Rectangle,
    SolverOptions,
    build_grid_domain,
)
from plaplab.asymptotics import QProfile, SweepOptions, run_sweep

LADDER_SOLVER = SolverOptions(grad_tol=1e-5, max_iters=8000)


@pytest.fixture(scope="session")
def square16():
    return build_grid_domain(Rectangle(1.0, 1.0), 1.0 / 16)


@pytest.fixture(scope="session")
def square32():
    return build_grid_domain(Rectangle(1.0, 1.0), 1.0 / 32)


@pytest.fixture(scope="session")
def square64():
    return build_grid_domain(Rectangle(1.0, 1.0), 1.0 / 64)


@pytest.fixture(scope="session")
def disk32():
    return build_grid_domain(Disk((0.0, 0.0), 1.0), 1.0 / 32)


@pytest.fixture(scope="session")
def disk64():
    return build_grid_domain(Disk((0.0, 0.0), 1.0), 1.0 / 64)


@pytest.fixture(scope="session")
def hyper_report_disk64(disk64):
    """Disk ladder p in {4,8,16,32}, q = p^2, h = 1/64, with wall time."""
    t0 = time.time()
    report = run_sweep(disk64, [4, 8, 16, 32], QProfile.power(2.0),
                       SweepOptions(solver=LADDER_SOLVER, limit_tol=0.15))
    return report, time.time() - t0


@pytest.fixture(scope="session")
def r1_report_square64(square64):
    """Square ladder p in {4,8,16,32}, q = 1, h = 1/64."""
    report = run_sweep(square64, [4, 8, 16, 32], QProfile.constant(1.0),
                       SweepOptions(solver=LADDER_SOLVER, limit_tol=0.2))
    return report
