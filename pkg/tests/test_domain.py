import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexpatch.domain import (DomainSpec, annulus, bem_from_curves, build_green_evaluator, disk,
                                ellipse_curve)
from vortexpatch.errors import CoincidentPoints, ExteriorPoint, IndexOutOfRange

inside = st.tuples(st.floats(0.0, 0.9), st.floats(0, 2 * np.pi)).map(
    lambda t: np.array([t[0] * np.cos(t[1]), t[0] * np.sin(t[1])]))


@pytest.fixture(scope="module")
def dsk():
    return build_green_evaluator(disk())


@pytest.fixture(scope="module")
def ann():
    return build_green_evaluator(annulus(0.4, [0.0]))


@settings(max_examples=40, deadline=None)
@given(inside, inside)
def test_disk_green_symmetric(x, y):
    ev = build_green_evaluator(disk())
    if np.linalg.norm(x - y) < 1e-3:
        return
    assert ev.green(x, y) == pytest.approx(ev.green(y, x), abs=1e-13)
    assert ev.green(x, y) > 0


def test_disk_green_vanishes_near_boundary(dsk):
    y = np.array([0.2, -0.1])
    for t in np.linspace(0, 2 * np.pi, 7):
        x = (1 - 1e-9) * np.array([np.cos(t), np.sin(t)])
        assert abs(dsk.green(x, y)) < 1e-8


def test_annulus_harmonic_measure_bounds(ann):
    for rad in (0.45, 0.6, 0.9):
        h = ann.harmonic_measure(1, [rad, 0.0])
        assert 0 < h < 1
    # radial: log-profile between the circles
    assert ann.harmonic_measure(1, [0.6, 0]) == pytest.approx(np.log(0.6) / np.log(0.4), abs=1e-10)
    with pytest.raises(IndexOutOfRange):
        ann.harmonic_measure(2, [0.6, 0])


def test_jets_match_finite_differences(ann):
    x, y = np.array([0.55, 0.2]), np.array([-0.3, 0.5])
    jet = ann.gt_jet(complex(*x), complex(*y))
    h = 1e-5
    for i in range(2):
        e = np.eye(2)[i] * h
        fd = (ann.gt_values(complex(*(x + e)), complex(*y)) -
              ann.gt_values(complex(*(x - e)), complex(*y))) / (2 * h)
        assert float(np.real(fd)) == pytest.approx(jet.g1[i], abs=1e-8)


def test_bem_ellipse_regular_part_symmetric():
    ev = build_green_evaluator(bem_from_curves([ellipse_curve(1.0, 0.7, 256)]))
    x, y = [0.3, 0.1], [-0.2, 0.25]
    assert ev.green_regular(x, y) == pytest.approx(ev.green_regular(y, x), abs=1e-10)
    assert ev.contains(np.array([0.9 + 0j]))[0] and not ev.contains(np.array([0.75j]))[0]


def test_errors(dsk):
    with pytest.raises(CoincidentPoints):
        dsk.green([0.1, 0.1], [0.1, 0.1])
    with pytest.raises(ExteriorPoint):
        dsk.green([1.2, 0.0], [0.1, 0.1])
    with pytest.raises(ValueError):
        DomainSpec("annulus", inner_radius=1.5, circulations=(0.0,)).validate()
    with pytest.raises(ValueError):
        bem_from_curves([ellipse_curve(1, 1, 16)]).validate()
