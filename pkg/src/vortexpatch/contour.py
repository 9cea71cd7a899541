"""Contour dynamics in conformal coordinates.

Each patch evolves through its centre and physical shape coefficients:

    d/dt (x_j, beta_j) = Q(r_j, beta_j) d/dtheta (Psi o Gamma_j)

Areas are exact by construction (a1 normalisation).  The sign follows the
Hamiltonian convention used for the point-vortex ODE, dX/dt = Lambda^{-1} J grad H.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .domain import GreenEvaluator
from .errors import NonConformal, PatchCollision, PatchOverlap, StepTooLarge
from .induction import PatchSystem
from .patchgeom import PatchShape, boundary_eval, enclosed_area, nodes, q_apply


@dataclass
class EvolutionState:
    ev: GreenEvaluator
    mu: np.ndarray
    shapes: list
    t: float = 0.0
    n_theta: int | None = None
    n_rad: int = 16

    @property
    def N(self):
        return len(self.shapes)

    @property
    def M(self):
        return self.shapes[0].M

    def system(self, check=True):
        return PatchSystem(self.ev, self.mu, self.shapes, self.n_theta, self.n_rad, check)

    def vector(self):
        return pack_shapes(self.shapes)

    def with_vector(self, u, t=None):
        return EvolutionState(self.ev, self.mu, unpack_shapes(u, self.shapes), self.t if t is None else t,
                              self.n_theta, self.n_rad)


def pack_shapes(shapes):
    parts = []
    for s in shapes:
        parts += [np.array([s.x.real, s.x.imag]), s.beta.ravel()]
    return np.concatenate(parts)


def unpack_shapes(u, like):
    out, i = [], 0
    for s in like:
        m = s.beta.size
        out.append(PatchShape(s.r, complex(u[i], u[i + 1]), u[i + 2:i + 2 + m].reshape(-1, 2)))
        i += 2 + m
    return out


def _upsample(v, n):
    c = np.fft.rfft(v)
    out = np.zeros(n // 2 + 1, complex)
    m = min(len(c), len(out))
    out[:m] = c[:m]
    if len(v) % 2 == 0:
        out[len(c) - 1] = 0.0     # Nyquist content is not representable on both grids
    return np.fft.irfft(out, n) * (n / len(v))


def rhs_shapes(ev, mu, shapes, n_theta=None, n_rad=16, check=True):
    """(dX/dt (2N,), list of d beta_j/dt) for physical shape coefficients."""
    try:
        sys = PatchSystem(ev, mu, shapes, n_theta, n_rad, check)
    except PatchOverlap as e:
        raise PatchCollision(str(e)) from e
    Xd = np.zeros(2 * len(shapes))
    bd = []
    for j, (s, ph) in enumerate(zip(shapes, sys.phi_samples())):
        y, a = q_apply(s, _upsample(ph, 2 * len(ph)), mean_tol=1e-8)
        Xd[2 * j:2 * j + 2] = y
        bd.append(a)
    return Xd, bd


def rhs(state: EvolutionState, check=True):
    Xd, bd = rhs_shapes(state.ev, state.mu, state.shapes, state.n_theta, state.n_rad, check)
    parts = []
    for j in range(state.N):
        parts += [Xd[2 * j:2 * j + 2], bd[j].ravel()]
    return np.concatenate(parts)


def _f(state, u):
    try:
        return rhs(state.with_vector(u), check=False)
    except NonConformal as e:
        raise StepTooLarge(f"conformality lost inside a step: {e}") from e


def rk4_step(state, u, dt):
    k1 = _f(state, u)
    k2 = _f(state, u + 0.5 * dt * k1)
    k3 = _f(state, u + 0.5 * dt * k2)
    k4 = _f(state, u + dt * k3)
    return u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rhs_jacobian(state, u, step=1e-6):
    """Forward-difference Jacobian of the rhs in packed coordinates."""
    f0 = _f(state, u)
    h = step * np.maximum(1.0, np.abs(u))
    cols = []
    for i in range(u.size):
        v = u.copy()
        v[i] += h[i]
        cols.append((_f(state, v) - f0) / h[i])
    return np.column_stack(cols)


class MidpointSolver:
    """Implicit midpoint, v = u + dt f((u + v)/2), by modified Newton.

    The Jacobian is frozen and only rebuilt when the iteration stalls, so a
    step costs a handful of rhs calls.  Unlike fixed-point iteration this stays
    convergent for dt far above the fastest Kelvin period, which is what long
    runs near a steady state need.
    """

    def __init__(self, tol=1e-13, max_iter=12):
        self.tol, self.max_iter = tol, max_iter
        self.J = None
        self._lu = None
        self._dt = None

    def _factor(self, state, u, dt):
        if self.J is None:
            self.J = rhs_jacobian(state, u)
        self._lu = lu_factor(np.eye(u.size) - 0.5 * dt * self.J)
        self._dt = dt

    def _iterate(self, state, u, dt):
        v = u + dt * _f(state, u)
        scale = max(1.0, np.abs(u).max())
        prev = np.inf
        for _ in range(self.max_iter):
            g = v - u - dt * _f(state, 0.5 * (u + v))
            dv = lu_solve(self._lu, g)
            v = v - dv
            err = np.abs(dv).max()
            if err <= self.tol * scale:
                return v
            if err > 0.5 * prev:
                break
            prev = err
        return None

    def __call__(self, state, u, dt):
        if self._lu is None or self._dt != dt:
            self._factor(state, u, dt)
        v = self._iterate(state, u, dt)
        if v is None:
            self.J = None
            self._factor(state, u, dt)
            v = self._iterate(state, u, dt)
        if v is None:
            raise StepTooLarge("implicit midpoint Newton iteration did not converge; reduce dt")
        return v


def midpoint_step(state, u, dt, tol=1e-13, max_iter=12):
    """One implicit midpoint step (fresh Jacobian; use MidpointSolver in loops)."""
    return MidpointSolver(tol, max_iter)(state, u, dt)


def max_stable_dt(state):
    rmin = min(s.r for s in state.shapes)
    return 0.1 * 2 * np.pi * rmin ** 2 / (np.abs(state.mu).max() * (state.M - 1))


@dataclass
class Snapshot:
    t: float
    X: np.ndarray
    beta: list
    Ep: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"t": round(self.t, 12), "X": self.X.tolist(),
                           "beta": [b.tolist() for b in self.beta], "Ep": self.Ep,
                           "diagnostics": self.diagnostics}, sort_keys=True)


def ledger(state: EvolutionState, energy=True):
    sys = state.system(check=False)
    areas = [enclosed_area(s) for s in state.shapes]
    return {"area_error": max(abs(a - np.pi * s.r ** 2) for a, s in zip(areas, state.shapes)),
            "Ep": sys.energy() if energy else None,
            "impulse": float(sum(m * abs(s.x) ** 2 for m, s in zip(state.mu, state.shapes)))}


def evolve(state: EvolutionState, T, dt, scheme="rk4", every=1, energy=True,
           tail_tol=None, enforce_dt=True):
    """Integrate to time T.  Returns (list of Snapshot, final EvolutionState)."""
    if enforce_dt and dt > max_stable_dt(state) * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} exceeds the Kelvin resolution limit {max_stable_dt(state):.3g}")
    if scheme not in ("rk4", "implicit-midpoint"):
        raise ValueError(f"unknown scheme {scheme!r}")
    step = rk4_step if scheme == "rk4" else MidpointSolver()
    nsteps = int(round(T / dt))
    u = state.vector()
    cur = state
    snaps = []

    def snap(s):
        led = ledger(s, energy)
        X = np.array([[sh.x.real, sh.x.imag] for sh in s.shapes]).ravel()
        snaps.append(Snapshot(s.t, X, [sh.beta.copy() for sh in s.shapes], led["Ep"],
                              {"area_error": led["area_error"], "impulse": led["impulse"]}))

    snap(cur)
    for i in range(nsteps):
        u = step(cur, u, dt)
        cur = cur.with_vector(u, t=state.t + (i + 1) * dt)
        for s in cur.shapes:
            if not s.is_admissible():
                raise StepTooLarge("shape left the conformal admissible set")
        if tail_tol is not None:
            tail = max(np.abs(s.beta[-2:]).max() for s in cur.shapes)
            if tail > tail_tol:
                raise StepTooLarge(f"spectral tail {tail:.2e} above monitor threshold")
        if (i + 1) % every == 0 or i + 1 == nsteps:
            try:
                cur.system(check=True)
            except PatchOverlap as e:
                raise PatchCollision(str(e)) from e
            snap(cur)
    return snaps, cur


def boundary_deviation(shapes_a, shapes_b, n=256):
    """max_j max_theta |Gamma_a,j - Gamma_b,j| on a common parameter grid."""
    th = nodes(n)
    return max(float(np.abs(boundary_eval(a, th)[0] - boundary_eval(b, th)[0]).max())
               for a, b in zip(shapes_a, shapes_b))


def write_jsonl(snaps, path):
    with open(path, "w") as fh:
        for s in snaps:
            fh.write(s.to_json() + "\n")
