import numpy as np
import pytest

from vortexpatch.domain import bem_from_curves, build_green_evaluator, disk, ellipse_curve
from vortexpatch.linstab import analyze
from vortexpatch.steady import solve_steady

ELLIPSE = (1.0, 0.7)
STABLE_X0 = [0.4, 0.0, -0.4, 0.0]       # pair on the major axis, D^2H < 0
SADDLE_X0 = [0.0, 0.3, 0.0, -0.3]       # pair on the minor axis, real B0 eigenvalues
RADII = (0.04, 0.02, 0.01)
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk_ev():
    return build_green_evaluator(disk())


@pytest.fixture(scope="session")
def ellipse_ev():
    return build_green_evaluator(bem_from_curves([ellipse_curve(*ELLIPSE, 256)]))


def _chain(ev, X0, radii):
    out, prev = {}, None
    for r in radii:
        prev = solve_steady(ev, [1.0, -1.0], r, X0, schedule=[np.full(2, r)], init=prev)
        out[r] = prev
    return out


@pytest.fixture(scope="session")
def stable_states(ellipse_ev):
    """Ellipse steady states at r = 0.04, 0.02, 0.01 via one continuation chain."""
    return _chain(ellipse_ev, STABLE_X0, RADII)


@pytest.fixture(scope="session")
def saddle_states(ellipse_ev):
    return _chain(ellipse_ev, SADDLE_X0, RADII[:2])


@pytest.fixture(scope="session")
def stable_analysis(stable_states):
    return {r: analyze(st) for r, st in stable_states.items()}


@pytest.fixture(scope="session")
def disk_single(disk_ev):
    """Centered single patch, mu = 2 pi, at r = 0.1 and 0.05."""
    mu = 2 * np.pi
    return {r: analyze(solve_steady(disk_ev, [mu], r, [0.0, 0.0])) for r in (0.1, 0.05)}
