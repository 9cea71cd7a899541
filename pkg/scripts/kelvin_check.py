"""Kelvin waves on a centred patch in the unit disk.

Compares the fast spectrum of the linearization with mu (k - 1) / (2 pi r^2),
then times one rotation of the wavenumber-3 mode with the contour integrator.
"""
import argparse

import numpy as np

from vortexpatch.contour import EvolutionState, evolve, max_stable_dt
from vortexpatch.domain import build_green_evaluator, disk
from vortexpatch.linstab import analyze, kelvin_prediction
from vortexpatch.patchgeom import PatchShape
from vortexpatch.steady import solve_steady

ap = argparse.ArgumentParser()
ap.add_argument("--r", type=float, default=0.1)
ap.add_argument("--M", type=int, default=16)
a = ap.parse_args()
mu = 2 * np.pi
ev = build_green_evaluator(disk())

_, rep = analyze(solve_steady(ev, [mu], a.r, [0.0, 0.0], M=a.M))
w = np.sort(rep.fast.imag[rep.fast.imag > 0])
print(" k   computed      predicted     rel err")
for k, wk in zip(range(2, a.M + 1), w):
    p = kelvin_prediction(mu, a.r, k)
    print(f"{k:2d}  {wk:12.6f}  {p:12.6f}  {abs(wk - p) / p:.2e}")

b = np.zeros((a.M - 2, 2))
b[1, 0] = 1e-4 * a.r
s = EvolutionState(ev, np.array([mu]), [PatchShape(a.r, 0j, b)])
P = 2 * np.pi ** 2 * a.r ** 2 / mu
dt = max_stable_dt(s)
snaps, _ = evolve(s, int(np.ceil(P / dt)) * dt, dt, energy=False)
ph = np.unwrap([np.angle(q.beta[0][1, 0] - 1j * q.beta[0][1, 1]) for q in snaps])
om = abs(np.polyfit([q.t for q in snaps], ph, 1)[0])
print(f"mode-3 period {2 * np.pi / om:.6e}, predicted {P:.6e}")
