import numpy as np
import pytest

from vortexpatch.domain import build_green_evaluator, disk
from vortexpatch.errors import LeftDomain
from vortexpatch.pointvortex import (VortexConfig, find_critical, grad_hessian, hamiltonian,
                                     integrate_pv, velocity)


@pytest.fixture(scope="module")
def ev():
    return build_green_evaluator(disk())


def test_gradient_matches_hamiltonian_fd(ev):
    cfg = VortexConfig(ev, [1.0, -0.7], [0.3, 0.1, -0.2, 0.4])
    g, Hs = grad_hessian(cfg)
    h = 1e-6
    fd = np.array([(hamiltonian(cfg, cfg.X + h * e) - hamiltonian(cfg, cfg.X - h * e)) / (2 * h)
                   for e in np.eye(4)])
    assert np.allclose(fd, g, atol=1e-8)
    assert np.allclose(Hs, Hs.T, atol=1e-12)


def test_single_vortex_orbit_conserves_H(ev):
    # a lone vortex in the disk circles the centre at constant |x|
    cfg = VortexConfig(ev, [1.0], [0.5, 0.0])
    t, traj, H = integrate_pv(cfg, None, T=2.0, dt=0.01)
    assert np.ptp(np.hypot(traj[:, 0], traj[:, 1])) < 1e-10
    assert np.ptp(H) < 1e-12
    # speed from the image vortex: |u| = mu r / (2 pi (1 - r^2))
    v = velocity(cfg)
    assert np.linalg.norm(v) == pytest.approx(0.5 / (2 * np.pi * 0.75), rel=1e-10)


def test_centred_vortex_is_nondegenerate_maximum(ev):
    rep = find_critical(VortexConfig(ev, [2.0], [0.1, -0.05]))
    assert np.allclose(rep.X, 0, atol=1e-12)
    assert rep.nondegenerate and rep.definite == "negative"
    d = rep.to_dict()
    assert d["iterations"] == rep.iterations


def test_integrator_guards(ev):
    with pytest.raises(LeftDomain):
        integrate_pv(VortexConfig(ev, [1.0], [0.999, 0.0]), T=0.1, dt=0.01)
    with pytest.raises(ValueError):
        integrate_pv(VortexConfig(ev, [1.0], [0.2, 0.0]), T=0.1, dt=-1)
    with pytest.raises(ValueError):
        VortexConfig(ev, [0.0], [0.2, 0.0])

