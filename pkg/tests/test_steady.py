import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vortexpatch.domain import annulus, build_green_evaluator, disk
from vortexpatch.errors import SolverError
from vortexpatch.steady import (_pack, _unpack, continuation_schedule, independent_boundary_stream,
                                residual_F, solve_steady)

EV = build_green_evaluator(disk())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(4, 9), st.data())
def test_pack_roundtrip(N, M, data):
    X = data.draw(arrays(float, 2 * N, elements=st.floats(-1, 1)))
    beta = data.draw(arrays(float, (N, M - 2, 2), elements=st.floats(-1, 1)))
    X2, b2 = _unpack(_pack(X, beta), N, M)
    assert np.array_equal(X, X2) and np.array_equal(beta, b2)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 0.05), st.floats(0.05, 0.5))
def test_schedule_geometric_and_decreasing(r, start):
    sch = [float(s[0]) for s in continuation_schedule(r, start)]
    assert sch[-1] == pytest.approx(r, rel=1e-15)
    assert all(a > b for a, b in zip(sch, sch[1:]))
    assert sch[0] <= max(start, r) * (1 + 1e-12)
    assert np.allclose(np.array(sch[1:]) / np.array(sch[:-1]), 0.5)


def test_centred_patch_is_a_circle():
    st_ = solve_steady(EV, [2 * np.pi], 0.05, [0.01, 0.0], M=8)
    assert np.allclose(st_.X, 0, atol=1e-12)
    assert np.abs(st_.beta).max() < 1e-12
    assert st_.diagnostics["oscillation_ok"] and st_.diagnostics["area_ok"]
    psi = independent_boundary_stream(st_, 24)
    assert np.ptp(psi[0]) < 1e-10
    d = st_.to_dict()
    assert d["M"] == 8 and len(d["beta"]) == 1


def test_annulus_single_vortex_is_degenerate():
    ev = build_green_evaluator(annulus(0.3, [0.0]))
    # a lone vortex in an annulus has a critical circle, hence a degenerate Hessian
    with pytest.raises(SolverError):
        solve_steady(ev, [1.0], 0.02, [0.55, 0.0], M=8)


def test_residual_vanishes_only_at_solution():
    st_ = solve_steady(EV, [1.0], 0.05, [0.0, 0.0], M=8)
    good = residual_F(EV, st_.mu, st_.X, st_.beta, st_.r).norm()
    bad = residual_F(EV, st_.mu, st_.X + [0.01, 0.0], st_.beta, st_.r).norm()
    assert good < 1e-10 < bad
