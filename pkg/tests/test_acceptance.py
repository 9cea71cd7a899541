"""Acceptance checks, one test per criterion.  Each prints a single PASS/FAIL line."""
import time

import numpy as np
import pytest

from vortexpatch.contour import EvolutionState, boundary_deviation, evolve, max_stable_dt
from vortexpatch.domain import bem_from_curves, build_green_evaluator, ellipse_curve
from vortexpatch.errors import SolverError
from vortexpatch.linstab import fd_consistency, invariant_split, kelvin_prediction, positivity_on_ZY
from vortexpatch.patchgeom import PatchShape
from vortexpatch.pointvortex import VortexConfig, find_critical
from vortexpatch.smoothprofile import (dh_profile_eigs, radial_ground_state, solve_steady_smooth,
                                       verify_smooth)
from vortexpatch.steady import solve_steady

from conftest import RADII, STABLE_X0, VERDICTS


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    print(line)
    VERDICTS.append(line)       # echoed again in the terminal summary
    assert ok, detail


def slope(r, y):
    return float(np.polyfit(np.log(r), np.log(y), 1)[0])


# 1 -------------------------------------------------------------------------

def test_c01_green_oracle(disk_ev):
    t0 = time.perf_counter()
    bem = build_green_evaluator(bem_from_curves([ellipse_curve(1.0, 1.0, 256)]))
    rng = np.random.default_rng(1)
    rad = 0.85 * np.sqrt(rng.random((100, 2)))
    ang = 2 * np.pi * rng.random((100, 2))
    pts = rad * np.exp(1j * ang)
    z, w = pts[:, 0], pts[:, 1]
    # independent oracle: the image-charge disk Green function, written out here
    g_exact = -np.log(np.abs(z - w)) / (2 * np.pi) + np.log(np.abs(1 - z * np.conj(w))) / (2 * np.pi)
    gt_exact = np.log(np.abs(1 - z * np.conj(w))) / (2 * np.pi)
    xz, xw = np.c_[z.real, z.imag], np.c_[w.real, w.imag]
    G = np.array([bem.green(a, b) for a, b in zip(xz, xw)])
    gt = np.array([bem.green_regular(a, b) for a, b in zip(xz, xw)])
    elapsed = time.perf_counter() - t0
    err = max(np.abs(G - g_exact).max(), np.abs(gt - gt_exact).max())
    report("c01 green oracle", err <= 1e-8 and elapsed < 10, f"err={err:.2e} time={elapsed:.1f}s")


# 2 -------------------------------------------------------------------------

def test_c02_kelvin_dispersion(disk_single):
    mu, errs, tops = 2 * np.pi, {}, {}
    for r, (sysL, rep) in disk_single.items():
        M = sysL.basis.M
        w = np.sort(rep.fast.imag[rep.fast.imag > 0])
        ks = np.arange(2, M // 2 + 1)
        pred = np.array([kelvin_prediction(mu, r, k) for k in ks])
        errs[r] = float(np.max(np.abs(w[:len(ks)] - pred) / pred))
        assert np.max(np.abs(rep.fast.real)) <= 1e-8 * np.abs(rep.fast).max()
        tops[r] = w[:len(ks)]
    ratio = tops[0.05] / tops[0.1]
    ok = all(errs[r] <= 5 * r for r in errs) and np.all(np.abs(ratio / 4 - 1) <= 0.1)
    report("c02 kelvin dispersion", ok,
           f"rel err {errs}, ratio range [{ratio.min():.4f}, {ratio.max():.4f}]")


# 3 -------------------------------------------------------------------------

def test_c03_slow_block_convergence(stable_analysis, disk_single):
    rs = np.array(RADII)
    dev = np.array([stable_analysis[r][1].slow_deviation for r in RADII])
    s = slope(rs, dev)
    # the theorem bounds the error by C r; the observed rate may be faster
    within = np.all(dev <= 10 * rs * np.abs(stable_analysis[RADII[0]][1].b0_eigs).max())
    single = max(np.abs(np.sort(rep.slow.imag) - np.array([-1.0, 1.0])).max() / r
                 for r, (_, rep) in disk_single.items())
    ok = s >= 0.85 and within and single <= 1.0
    report("c03 slow-block convergence", ok,
           f"deviations {dev}, slope {s:.2f}, single-disk max|slow - (+-i)|/r = {single:.1e}")


# 4 -------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="two equal same-sign vortices in the disk have no critical "
                                       "point of H; see the decisions ledger")
def test_c04_steady_disk_equal_pair(disk_ev):
    try:
        st = solve_steady(disk_ev, [1.0, 1.0], 0.01, [0.3, 0.0, -0.3, 0.0])
    except SolverError as e:
        report("c04 steady (disk, equal pair; xfail, no critical point)", False, f"{type(e).__name__}: {e}")
    d = st.diagnostics
    report("c04 steady (disk, equal pair; xfail, no critical point)", d["residual_norm"] <= 1e-10, str(d["residual_norm"]))


def test_c04_steady_construction_ellipse(stable_states):
    iters, res, osc = [], [], []
    for st in stable_states.values():
        iters += [h["iterations"] for h in st.history]
        res.append(st.diagnostics["residual_norm"])
        osc.append(max(st.diagnostics["boundary_stream_oscillation"]))
    ok = max(iters) <= 6 and max(res) <= 1e-10 and max(osc) <= 1e-9
    report("c04 steady construction (ellipse substitute)", ok,
           f"iterations {iters}, residuals {np.array(res)}, oscillation {np.array(osc)}")


def test_c04_disk_has_no_equal_pair_critical_point(disk_ev):
    # documents why the literal case is unattainable
    cfg = VortexConfig(disk_ev, np.array([1.0, 1.0]), np.array([0.3, 0.0, -0.3, 0.0]))
    with pytest.raises(SolverError):
        rep = find_critical(cfg, cfg.X)
        if not rep.nondegenerate:
            raise SolverError("degenerate")


# 5 -------------------------------------------------------------------------

def test_c05_shape_asymptotics(stable_states):
    rs = np.array(RADII)
    nrm = np.array([np.linalg.norm(stable_states[r].beta) for r in RADII])
    rem = np.array([np.linalg.norm(stable_states[r].beta[:, 1:]) for r in RADII])
    s1, s2 = slope(rs, nrm), slope(rs, rem)
    ok = abs(s1 - 1) <= 0.15 and abs(s2 - 2) <= 0.3 and np.all(rem < 0.1 * nrm)
    report("c05 shape asymptotics", ok, f"|beta| slope {s1:.3f}, remainder slope {s2:.3f}")


# 6 -------------------------------------------------------------------------

def test_c06_hamiltonian_structure(stable_analysis):
    sysL, rep = stable_analysis[0.02]
    sym = sysL.symmetry_defect()
    _, SY, _ = invariant_split(sysL)
    pos, flag = positivity_on_ZY(sysL, SY)
    ok = sym <= 1e-10 and rep.pairing_defect <= 1e-8 and flag and pos > 0
    report("c06 hamiltonian structure", ok,
           f"symmetry {sym:.1e}, pairing {rep.pairing_defect:.1e}, positivity {pos:.4f}")


# 7 -------------------------------------------------------------------------

def test_c07_invariant_splitting(stable_analysis):
    g = {r: stable_analysis[r][1].graph_norms for r in (0.02, 0.01)}
    ok = True
    for key in ("Mr_inv_S0", "SY_Mr_inv"):
        ok &= all(g[r][key] <= 1 for r in g)
        ok &= abs(g[0.01][key] / g[0.02][key] - 0.5) <= 0.125
    inv = max(max(g[r]["invariance_Z0"], g[r]["invariance_ZY"]) for r in g)
    ok &= inv <= 1e-8
    report("c07 invariant splitting", ok,
           f"S0 {g[0.02]['Mr_inv_S0']:.4f}->{g[0.01]['Mr_inv_S0']:.4f}, "
           f"SY {g[0.02]['SY_Mr_inv']:.4f}->{g[0.01]['SY_Mr_inv']:.4f}, invariance {inv:.1e}")


# 8 -------------------------------------------------------------------------

def test_c08a_steady_state_preserved(stable_states):
    st = stable_states[0.02]
    es = EvolutionState(st.ev, st.mu, st.shapes(), n_theta=st.n_theta, n_rad=st.n_rad)
    _, fin = evolve(es, 10.0, 0.5, scheme="implicit-midpoint", every=10 ** 6, energy=False,
                    enforce_dt=False)
    dev = boundary_deviation(es.shapes, fin.shapes)
    report("c08a steady state preserved over T=10", dev <= 1e-6, f"deviation {dev:.2e}")


def test_c08b_rk4_energy_order(disk_ev):
    M, r, mu = 8, 0.1, 2 * np.pi
    b = np.zeros((M - 2, 2))
    b[0, 0], b[1, 1] = 0.05, 0.03
    s = EvolutionState(disk_ev, np.array([mu]), [PatchShape(r, 0.3 + 0j, b)])
    L = max_stable_dt(s)
    T = 200 * L
    E = {}
    for k in (1, 2, 4, 16):
        snaps, _ = evolve(s, T, L / k, every=10 ** 6, enforce_dt=False)
        E[k] = snaps[-1].Ep
    e = [abs(E[k] - E[16]) for k in (1, 2, 4)]
    ratios = [e[0] / e[1], e[1] / e[2]]
    ok = all(abs(q / 16 - 1) <= 0.3 for q in ratios)
    report("c08b rk4 energy order", ok, f"errors {np.array(e)}, ratios {np.round(ratios, 2)}")


def test_c08c_kelvin_mode3_period(disk_ev):
    M, r, mu = 8, 0.1, 2 * np.pi
    b = np.zeros((M - 2, 2))
    b[1, 0] = 1e-4 * r          # wavenumber-3 Kelvin mode sits in the z^4 coefficient
    s = EvolutionState(disk_ev, np.array([mu]), [PatchShape(r, 0j, b)])
    P = 2 * np.pi ** 2 * r ** 2 / mu
    dt = max_stable_dt(s)
    n = int(np.ceil(2 * P / dt))
    snaps, _ = evolve(s, n * dt, dt, every=1, energy=False)
    t = np.array([q.t for q in snaps])
    phase = np.unwrap([np.angle(q.beta[0][1, 0] - 1j * q.beta[0][1, 1]) for q in snaps])
    omega = abs(np.polyfit(t, phase, 1)[0])
    err = abs(2 * np.pi / omega - P) / P
    report("c08c kelvin mode-3 period", err <= 0.02, f"period rel err {err:.1e}")


# 9 -------------------------------------------------------------------------

def test_c09a_single_vortex_stable(disk_single):
    verdicts = {r: rep.verdict for r, (_, rep) in disk_single.items()}
    hess = [np.linalg.eigvalsh(sysL.hessian) for sysL, _ in disk_single.values()]
    ok = all(v == "stable" for v in verdicts.values()) and all(np.all(h < 0) for h in hess)
    report("c09a single disk vortex stable", ok, f"verdicts {verdicts}")


def test_c09b_unstable_trichotomy(saddle_states):
    from vortexpatch.linstab import analyze
    devs, ok = {}, True
    for r, st in saddle_states.items():
        _, rep = analyze(st)
        b0 = rep.b0_eigs[np.argmax(rep.b0_eigs.real)]
        lam = rep.eigenvalues[np.argmin(np.abs(rep.eigenvalues - b0))]
        devs[r] = float(abs(lam - b0))
        ok &= rep.verdict == "unstable-trichotomy" and lam.real > 0 and devs[r] <= abs(b0) * r
    report("c09b unstable trichotomy", ok, f"|lambda - lambda_B0| = {devs}")


# 10 ------------------------------------------------------------------------

def test_c10_smooth_profiles(ellipse_ev):
    prof = radial_ground_state(1.0, 1.0)
    eig = dh_profile_eigs(prof, 16)
    sol = solve_steady_smooth(ellipse_ev, [1.0, -1.0], 0.02, STABLE_X0, prof,
                              schedule=[np.full(2, 0.04), np.full(2, 0.02)])
    v = verify_smooth(sol)
    osc = max(v["interior_oscillation"])
    circ = max(v["circulation_error"])
    # grid_error cross-checks the Chebyshev collocation against the shooting solution
    ok = (prof.residual <= 1e-10 and prof.grid_error <= 1e-10 and osc <= 1e-8
          and circ <= 1e-12 and eig["min_abs"] > 0)
    report("c10 smooth profiles", ok,
           f"shooting residual {prof.residual:.1e}, oscillation {osc:.1e}, "
           f"circulation err {circ:.1e}, min|lambda_m| {eig['min_abs']:.4f}")


# 11 ------------------------------------------------------------------------

def test_c11_linearization_consistency(stable_analysis):
    errs = {r: float(np.max(fd_consistency(stable_analysis[r][0], n_dirs=10))) for r in (0.02, 0.01)}
    report("c11 linearization consistency", max(errs.values()) <= 1e-5, f"max FD error {errs}")
