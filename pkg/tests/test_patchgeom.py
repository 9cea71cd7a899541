import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vortexpatch.errors import NonConformal, NotNearCircle
from vortexpatch.patchgeom import (PatchShape, ab_to_samples, conformal_radius_bound, enclosed_area,
                                   normalize_conformal, q_apply, q_invert, samples_to_ab,
                                   sobolev_norm)

M = 10
unit = st.integers(-1000, 1000).map(lambda k: k / 1000)
small_beta = arrays(float, (M - 2, 2), elements=unit).map(
    lambda b: 0.5 * conformal_radius_bound(M) * b / max(1.0, sobolev_norm(b)))


@settings(max_examples=50, deadline=None)
@given(arrays(float, (9, 2), elements=st.floats(-5, 5)))
def test_fourier_roundtrip(ab):
    ab[0, 1] = 0.0
    assert np.allclose(samples_to_ab(ab_to_samples(ab, 32), 8), ab, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(small_beta, st.floats(0.01, 0.3))
def test_area_normalisation(beta, r):
    # the a1 factor pins the enclosed area at pi r^2 for any admissible shape
    s = PatchShape(r, 0.1 + 0.2j, beta)
    assert enclosed_area(s) == pytest.approx(np.pi * r ** 2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(small_beta, arrays(float, (M - 2, 2), elements=unit), unit, unit)
def test_q_roundtrip(beta, alpha, y0, y1):
    s = PatchShape(0.05, 0j, beta)
    f = q_invert(s, (y0, y1), alpha)
    y, a = q_apply(s, f)
    assert np.allclose(y, [y0, y1], atol=1e-9)
    assert np.allclose(a, alpha, atol=1e-9)


def test_dict_roundtrip_and_checks():
    b = np.zeros((6, 2))
    b[0] = (0.01, -0.02)
    s = PatchShape(0.1, 0.3 - 0.1j, b)
    t = PatchShape.from_dict(s.to_dict())
    assert (t.r, t.x) == (s.r, s.x) and np.array_equal(t.beta, b)
    assert s.M == 8 and 0 < s.a1 < 1
    with pytest.raises(NonConformal):
        PatchShape(0.1, 0j, np.full((6, 2), 0.5)).check()


def test_normalize_recovers_shape():
    b = np.zeros((6, 2))
    b[0], b[2] = (0.02, 0.01), (-0.005, 0.0)
    s = PatchShape(0.2, 0.1j, b)
    # compose with a small disk automorphism then normalise back
    P = np.polynomial.polynomial
    n = 512
    z = np.exp(2j * np.pi * np.arange(n) / n)
    c, rot = 0.03 - 0.02j, np.exp(0.3j)
    w = rot * (z + c) / (1 + np.conj(c) * z)
    raw = np.fft.fft(P.polyval(w, s.poly()))[:40] / n
    res = normalize_conformal(raw, M=8)
    assert res.shape.r == pytest.approx(0.2, rel=1e-10)
    assert np.allclose(res.shape.beta, b, atol=1e-10)
    with pytest.raises(NotNearCircle):
        normalize_conformal([0.0, 1.0, 0.5, 0.2])
