import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_bvp

from vortexpatch.errors import DegenerateLinearization, NoSolutionInWindow
from vortexpatch.smoothprofile import (J01_SQ, cheb, cheb_interp_matrix, dh_profile_eigs,
                                       radial_ground_state, self_stream_h_smooth,
                                       solve_profile_on_disk)


@pytest.fixture(scope="module")
def prof():
    return radial_ground_state(1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 20), st.lists(st.floats(-2, 2), min_size=1, max_size=5))
def test_cheb_differentiates_polynomials_exactly(N, coef):
    x, D = cheb(N)
    p = np.polynomial.Polynomial(coef)
    assert np.allclose(D @ p(x), p.deriv()(x), atol=1e-9 * (1 + np.abs(coef).sum()) * N ** 2)
    t = np.linspace(-1, 1, 7)
    assert np.allclose(cheb_interp_matrix(N, t) @ p(x), p(t), atol=1e-11)


def test_ground_state_against_bvp_oracle(prof):
    f = lambda u: -u - u ** 3

    # y = (psi, psi'); the -psi'/r term goes through solve_bvp's singular-term S
    r = np.linspace(0, 1, 200)
    sol = solve_bvp(lambda r, y: np.vstack([y[1], f(y[0])]), lambda a, b: np.array([a[1], b[0]]), r,
                    np.vstack([-3 * np.cos(np.pi * r / 2), 1.5 * np.pi * np.sin(np.pi * r / 2)]),
                    S=np.array([[0.0, 0.0], [0.0, -1.0]]), tol=1e-9, max_nodes=100000)
    assert sol.success
    rr = np.linspace(0.05, 0.95, 9)
    assert np.allclose(prof(rr), sol.sol(rr)[0], atol=1e-6)
    assert prof.residual <= 1e-10 and prof.grid_error <= 1e-10
    assert prof.psi0 < 0 and np.all(prof.psi < 0)
    assert prof.margin > 0


def test_profile_errors():
    with pytest.raises(DegenerateLinearization):
        radial_ground_state(1.0, 0.0)
    with pytest.raises(NoSolutionInWindow):
        radial_ground_state(J01_SQ + 0.1, 1.0)
    with pytest.raises(ValueError):
        radial_ground_state(1.0, 1.0, n_cheb=48)


def test_disk_solve_and_h(prof):
    U, grid, err = solve_profile_on_disk(prof, np.zeros((6, 2)))
    assert err < 1e-9
    assert np.allclose(U, prof.psi[:, None], atol=1e-11)
    assert self_stream_h_smooth(prof, np.zeros((6, 2))).norm() < 1e-12
    eig = dh_profile_eigs(prof, M=6)
    assert eig["min_abs"] > 0 and eig["offband"] < 1e-8
