import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortexpatch.domain import build_green_evaluator, disk
from vortexpatch.linstab import (ModeBasis, analyze, b0_verdict, invariant_split, kelvin_prediction,
                                 positivity_on_ZY, quadratic_form_drift)
from vortexpatch.steady import solve_steady

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@pytest.fixture(scope="module")
def centred():
    ev = build_green_evaluator(disk())
    st_ = solve_steady(ev, [2 * np.pi], 0.1, [0.0, 0.0], M=8)
    return analyze(st_)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(3, 12))
def test_basis_index_is_a_bijection(N, M):
    b = ModeBasis(N, M, np.full(N, 0.1))
    idx = [b.index(j, k, p) for j, k, p in b.modes()]
    assert sorted(idx) == list(range(b.dim))
    assert b.dim == 2 * N + 2 * N * (M - 1)


def test_centred_patch_spectrum(centred):
    sysL, rep = centred
    mu, r = 2 * np.pi, 0.1
    assert sysL.symmetry_defect() < 1e-12
    # position block is minus the point-vortex Hessian
    assert np.allclose(sysL.L[:2, :2], -sysL.hessian, atol=1e-10)
    b = sysL.basis
    # free-space Kelvin values; the wall image shifts mode k by O(r^(2k))
    for k in range(2, b.M + 1):
        i = b.index(0, k, 0)
        assert sysL.L[i, i] == pytest.approx(mu ** 2 * (k - 1) / (2 * k * np.pi * r ** 2),
                                              rel=2 * r ** (2 * k - 2))
    assert np.allclose(np.sort(rep.slow.imag), [-1.0, 1.0], atol=1e-10)
    fast = np.sort(rep.fast.imag[rep.fast.imag > 0])
    assert np.allclose(fast, [kelvin_prediction(mu, r, k) for k in range(2, b.M + 1)], rtol=1e-3)
    assert rep.verdict == "stable"


def test_positivity_constant_on_disk(centred):
    sysL, _ = centred
    _, SY, norms = invariant_split(sysL)
    pos, ok = positivity_on_ZY(sysL, SY)
    # mu^2/(4 pi) up to the O(r^2) coupling to the position block
    assert ok and pos == pytest.approx((2 * np.pi) ** 2 / (4 * np.pi), rel=1e-3)
    assert norms["invariance_ZY"] < 1e-12
    assert quadratic_form_drift(sysL) < 1e-10


def test_b0_verdicts():
    neg = -np.diag([2.0, 1.0])
    assert b0_verdict(J2 @ neg, neg) == "stable"
    saddle = np.diag([1.0, -1.0])
    assert b0_verdict(J2 @ saddle, saddle) == "unstable-trichotomy"
