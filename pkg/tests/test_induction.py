import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexpatch.domain import build_green_evaluator, disk
from vortexpatch.errors import PatchOverlap
from vortexpatch.induction import (PatchSystem, check_quadrature, dh0_apply, self_log_potential,
                                   self_stream_h)
from vortexpatch.patchgeom import PatchShape, nodes

EV = build_green_evaluator(disk())


def _deformed(r=0.1, x=0.2 + 0.1j, M=12):
    b = np.zeros((M - 2, 2))
    b[0], b[1] = (0.03, -0.01), (0.0, 0.008)
    return PatchShape(r, x, b)


def test_self_log_potential_of_circle():
    # (1/2pi) int_{|y|<r} log|x - y| dy = (r^2/2) log r for |x| = r
    r = 0.3
    th = nodes(64)
    g, dg = r * np.exp(1j * th), 1j * r * np.exp(1j * th)
    assert np.allclose(self_log_potential(g, dg), 0.5 * r ** 2 * np.log(r), atol=1e-14)


def test_centred_patch_stream_is_constant_and_exact():
    r, mu = 0.2, 1.3
    sys = PatchSystem(EV, [mu], [PatchShape.circle(r, 0j, 8)])
    psi = sys.boundary_stream()[0]
    assert np.ptp(psi) < 1e-13
    assert abs(psi.mean()) == pytest.approx(mu / (2 * np.pi) * abs(np.log(r)), rel=1e-12)


def test_h_vanishes_on_circle_and_linearises_to_closed_form():
    M = 10
    assert self_stream_h(np.zeros((M - 2, 2))).norm() < 1e-14
    rng = np.random.default_rng(3)
    a = rng.standard_normal((M - 2, 2))
    eps = 1e-5
    fd = (self_stream_h(eps * a).ab - self_stream_h(-eps * a).ab) / (2 * eps)
    assert np.allclose(fd[:M + 1], dh0_apply(a).ab, atol=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_energy_rotation_invariant_in_disk(phi):
    s = _deformed()
    base = PatchSystem(EV, [1.0], [s]).energy()
    rot = np.exp(1j * phi)
    # rotate the image, then reparametrise z -> z / rot so Gamma'(0) stays positive
    m = np.arange(3, s.M + 1)
    c = (s.beta[:, 0] - 1j * s.beta[:, 1]) * rot ** (1 - m)
    t = PatchShape(s.r, s.x * rot, np.column_stack([c.real, -c.imag]))
    assert PatchSystem(EV, [1.0], [t]).energy() == pytest.approx(base, rel=1e-10)


def test_quadrature_converged_and_overlap_detected():
    sys = PatchSystem(EV, [1.0, -0.5], [_deformed(), _deformed(0.08, -0.3 + 0j)])
    assert check_quadrature(sys) < 1e-9
    with pytest.raises(PatchOverlap):
        PatchSystem(EV, [1.0, 1.0], [PatchShape.circle(0.1, 0j, 8), PatchShape.circle(0.1, 0.15, 8)])
    with pytest.raises(PatchOverlap):
        PatchSystem(EV, [1.0], [PatchShape.circle(0.1, 0.95, 8)])
