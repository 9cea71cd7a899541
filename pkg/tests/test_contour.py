import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vortexpatch.contour import (EvolutionState, MidpointSolver, evolve, max_stable_dt, pack_shapes,
                                 rhs, rhs_shapes, rk4_step, unpack_shapes, write_jsonl)
from vortexpatch.domain import build_green_evaluator, disk
from vortexpatch.errors import StepTooLarge
from vortexpatch.patchgeom import PatchShape
from vortexpatch.pointvortex import VortexConfig, velocity

EV = build_green_evaluator(disk())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(4, 8), st.data())
def test_pack_roundtrip(N, M, data):
    like = [PatchShape.circle(0.05, 0j, M) for _ in range(N)]
    u = data.draw(arrays(float, N * (2 + 2 * (M - 2)), elements=st.floats(-1, 1)))
    assert np.array_equal(pack_shapes(unpack_shapes(u, like)), u)


def test_translated_circle_moves_like_a_point_vortex():
    x, r = 0.3, 0.02
    Xd, bd = rhs_shapes(EV, np.array([1.0]), [PatchShape.circle(r, x, 12)])
    v = velocity(VortexConfig(EV, [1.0], [x, 0.0]))
    assert np.allclose(Xd, v, atol=1e-12)
    # the leading shape rate is the image strain at the centre, not zero
    jt = EV.reg0_jet(complex(x), complex(x))
    e = np.hypot(0.5 * (jt.h11[0, 0] - jt.h11[1, 1]), jt.h11[0, 1])
    assert np.hypot(*bd[0][0]) == pytest.approx(e, rel=1e-6)
    # higher modes see the next image term, one power of r smaller
    assert np.abs(bd[0][1:]).max() < r * e


def test_integrators_agree_on_short_run():
    b = np.zeros((6, 2))
    b[0] = (0.004, 0.0)
    s = EvolutionState(EV, np.array([2 * np.pi]), [PatchShape(0.1, 0.2 + 0j, b)])
    dt = max_stable_dt(s)
    u0 = s.vector()
    a, m = u0.copy(), u0.copy()
    solver = MidpointSolver()
    for _ in range(4):
        a = rk4_step(s, a, dt / 4)
        m = solver(s, m, dt / 4)
    # second- vs fourth-order scheme: agreement to O(dt^3) over the step
    assert np.abs(a - m).max() < 1e-4 * np.abs(rhs(s)).max() * dt


def test_step_limits_and_scheme_check(tmp_path):
    s = EvolutionState(EV, np.array([1.0]), [PatchShape.circle(0.05, 0j, 8)])
    with pytest.raises(StepTooLarge):
        evolve(s, 1.0, 10 * max_stable_dt(s))
    with pytest.raises(ValueError):
        evolve(s, 1.0, max_stable_dt(s), scheme="euler")
    snaps, fin = evolve(s, 3 * max_stable_dt(s), max_stable_dt(s), every=1)
    assert len(snaps) == 4 and fin.t == pytest.approx(snaps[-1].t)
    write_jsonl(snaps, tmp_path / "t.jsonl")
    lines = (tmp_path / "t.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["Ep"] == pytest.approx(snaps[-1].Ep)
