import numpy as np
import pytest

from evotherm.assembly import assemble
from evotherm.material import default_material
from evotherm.operators import Grid
from evotherm.solver import TimeAxis, recover_fields, solve, source_vector

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def pulse(times, onset=0.0, duration=0.1):
    s = (np.asarray(times) - onset) / duration
    return np.where((s >= 0) & (s <= 1), np.sin(np.pi * np.clip(s, 0, 1)) ** 2, 0.0)


def gaussian(x, center, width=0.1):
    return np.exp(-((x - center) ** 2) / (2 * width**2))


def sources_1d(grid, axis, onset=0.0):
    """Smooth force and heat pulses on a 1D grid."""
    x = grid.node_coordinates()[:, 0]
    p = pulse(axis.times, onset)
    return np.outer(p, gaussian(x, 0.3)), np.outer(p, gaussian(x, 0.5))


def run_variant(variant, grid=None, axis=None, onset=0.0, **overrides):
    grid = grid or Grid((12,), (1.0,))
    axis = axis or TimeAxis(0.0, 1e-3, 200, 1.0)
    m = default_material(grid, **overrides)
    system = assemble(variant, grid, m)
    F, Q = sources_1d(grid, axis, onset)
    traj = solve(system, source_vector(system, F, Q, axis), axis)
    return system, traj, recover_fields(traj, system), (F, Q)


@pytest.fixture
def grid1d():
    return Grid((12,), (1.0,))


@pytest.fixture
def grid2d():
    return Grid((5, 4), (1.0, 0.8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    return (Q * lam) @ Q.T
