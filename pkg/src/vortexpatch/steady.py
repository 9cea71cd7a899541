"""Steady vortex patches near a nondegenerate critical point of H.

Unknowns per patch: centre x_j and scaled shape coefficients bhat_j, with the
physical shape coefficients equal to r_j * bhat_j.  The residual is

    F_j = r_j^{-1} phi_j,      phi_j = d/dtheta (Psi o Gamma_j),

truncated to Fourier modes 1..M-1, which makes the system square.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from threadpoolctl import threadpool_limits

from .domain import GreenEvaluator
from .errors import DegenerateCritical, NoConvergence, NonConformal, PatchOverlap
from .induction import PatchSystem, dh0_apply, log_potential
from .patchgeom import (PatchShape, enclosed_area, nodes, samples_to_ab)
from .pointvortex import VortexConfig, find_critical, grad_hessian, symplectic


@dataclass
class ResidualSplit:
    y: np.ndarray            # (2N,) mode-1 (cos, sin) coefficients per patch
    shape: np.ndarray        # (N, M-2, 2) modes 2..M-1
    r: np.ndarray

    def vector(self):
        N = len(self.r)
        parts = []
        for j in range(N):
            parts.append(self.y[2 * j:2 * j + 2])
            parts.append(self.shape[j].reshape(-1))
        return np.concatenate(parts)

    def norm(self):
        return float(np.abs(self.vector()).max())


@dataclass
class SteadyState:
    r: np.ndarray
    X: np.ndarray
    beta: np.ndarray                      # scaled coefficients, (N, M-2, 2)
    mu: np.ndarray
    ev: GreenEvaluator = field(repr=False)
    M: int = 32
    n_theta: int | None = None
    n_rad: int = 16
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def N(self):
        return len(self.r)

    def shapes(self, pad_to=None):
        out = []
        for j in range(self.N):
            b = self.r[j] * self.beta[j]
            if pad_to and pad_to > self.M:
                b = np.vstack([b, np.zeros((pad_to - self.M, 2))])
            out.append(PatchShape(self.r[j], complex(self.X[2 * j], self.X[2 * j + 1]), b))
        return out

    def system(self, **kw):
        return PatchSystem(self.ev, self.mu, self.shapes(), kw.get("n_theta", self.n_theta),
                           kw.get("n_rad", self.n_rad))

    def to_dict(self):
        return {"r": self.r.tolist(), "X": self.X.tolist(),
                "beta": [[[float(a), float(b)] for a, b in bj] for bj in self.beta],
                "mu": self.mu.tolist(), "M": self.M,
                "diagnostics": _jsonable(self.diagnostics)}


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, np.ndarray):
        return d.tolist()
    if isinstance(d, np.generic):
        return d.item()
    return d


def _unpack(u, N, M):
    X = u[:2 * N].copy()
    beta = u[2 * N:].reshape(N, M - 2, 2)
    return X, beta


def _pack(X, beta):
    return np.concatenate([np.asarray(X, float).ravel(), np.asarray(beta, float).ravel()])


def build_system(ev, mu, X, beta, r, n_theta=None, n_rad=16, check=True):
    r = np.asarray(r, float)
    shapes = []
    for j in range(len(r)):
        sh = PatchShape(r[j], complex(X[2 * j], X[2 * j + 1]), r[j] * np.asarray(beta[j]))
        if not sh.is_admissible():
            raise NonConformal(f"patch {j} shape is not admissible")
        shapes.append(sh)
    return PatchSystem(ev, mu, shapes, n_theta, n_rad, check)


def residual_F(ev, mu, X, beta, r, n_theta=None, n_rad=16, check=True) -> ResidualSplit:
    r = np.asarray(r, float)
    beta = np.asarray(beta, float)
    N, M = len(r), beta.shape[1] + 2
    sys = build_system(ev, mu, X, beta, r, n_theta, n_rad, check)
    y = np.zeros(2 * N)
    sh = np.zeros((N, M - 2, 2))
    for j, ph in enumerate(sys.phi_samples()):
        ab = samples_to_ab(ph / r[j], M - 1)
        y[2 * j:2 * j + 2] = ab[1]
        sh[j] = ab[2:M]
    return ResidualSplit(y, sh, r)


def jacobian_fd(fun, u, f0=None, step=1e-6, threads=1):
    """Forward-difference Jacobian.

    Columns are evaluated serially: concurrent LAPACK calls from Python threads
    are not safe with every OpenBLAS build.  `threads` sizes the BLAS pool instead.
    """
    f0 = fun(u) if f0 is None else f0
    h = step * np.maximum(1.0, np.abs(u))
    cols = []
    with threadpool_limits(limits=max(1, int(threads or 1))):
        for i in range(u.size):
            v = u.copy()
            v[i] += h[i]
            cols.append((fun(v) - f0) / h[i])
    return np.column_stack(cols)


def block_preconditioner(ev, mu, X, M):
    """diag(Lambda^{-1} J_N D^2H(X), mu_j Dh(0)) in the residual ordering."""
    mu = np.asarray(mu, float)
    N = len(mu)
    _, Hs = grad_hessian(VortexConfig(ev, mu, X))
    B0 = symplectic(mu) @ Hs
    n1 = 2 * (M - 2)
    dh = np.zeros((n1, n1))
    for i in range(n1):
        e = np.zeros(n1)
        e[i] = 1.0
        dh[:, i] = dh0_apply(e.reshape(-1, 2)).ab[2:M].reshape(-1)
    P = np.zeros((2 * N + N * n1, 2 * N + N * n1))
    # residual/unknown ordering per patch: [mode1 (2), shape (n1)] vs [X (2N), beta]
    rows = [np.r_[2 * j + j * n1: 2 * j + j * n1 + 2] for j in range(N)]
    srow = [np.r_[2 * j + 2 + j * n1: 2 * (j + 1) + (j + 1) * n1] for j in range(N)]
    for j in range(N):
        for k in range(N):
            P[np.ix_(rows[j], np.r_[2 * k:2 * k + 2])] = B0[2 * j:2 * j + 2, 2 * k:2 * k + 2]
        P[np.ix_(srow[j], np.r_[2 * N + j * n1:2 * N + (j + 1) * n1])] = mu[j] * dh
    return P


def separation(ev, X):
    z = np.asarray(X, float).reshape(-1, 2) @ np.array([1, 1j])
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return float(min(d.min() if d.size > 1 else np.inf, ev.boundary_distance(z).min()))


def newton(fun, u, tol, max_iter=6, threads=1):
    f = fun(u)
    hist = [float(np.abs(f).max())]
    it = 0
    J = None
    while hist[-1] > tol:
        if it >= max_iter:
            raise NoConvergence(f"residual {hist[-1]:.3e} after {max_iter} Newton steps")
        J = jacobian_fd(fun, u, f, threads=threads)
        u = u - np.linalg.solve(J, f)
        f = fun(u)
        hist.append(float(np.abs(f).max()))
        it += 1
    return u, hist, J


def solve_steady(ev, mu, r, X0, tol=1e-10, M=32, n_theta=None, n_rad=16,
                 schedule=None, max_iter=6, threads=1, verbose=False,
                 init: SteadyState | None = None) -> SteadyState:
    """Newton with continuation in |r| from 0.1 * separation down to r.

    ``init`` warm-starts from an already solved state (same M); its radius is
    taken as the previous continuation level.
    """
    mu = np.asarray(mu, float)
    r = np.atleast_1d(np.asarray(r, float))
    N = len(mu)
    if r.size == 1 and N > 1:
        r = np.full(N, r[0])
    cfg = VortexConfig(ev, mu, X0)
    rep = find_critical(cfg, X0)
    if not rep.nondegenerate:
        raise DegenerateCritical("D^2H is (near) singular at the critical point")
    P = block_preconditioner(ev, mu, rep.X, M)
    if schedule is None:
        schedule = continuation_schedule(r, 0.1 * separation(ev, rep.X))
    X = rep.X.copy()
    beta = np.zeros((N, M - 2, 2))
    history = []
    prev = None
    if init is not None:
        if init.M != M:
            raise ValueError("warm start needs the same truncation M")
        X, beta, prev = init.X.copy(), init.beta.copy(), np.asarray(init.r, float)
    J = None
    for rr in schedule:
        rr = np.atleast_1d(np.asarray(rr, float))
        if prev is not None:
            beta = beta * (rr / prev)[:, None, None]

        def fun(u, rr=rr):
            Xu, bu = _unpack(u, N, M)
            return residual_F(ev, mu, Xu, bu, rr, n_theta, n_rad, check=False).vector()

        build_system(ev, mu, X, beta, rr, n_theta, n_rad, check=True)
        u, hist, Jl = newton(fun, _pack(X, beta), tol, max_iter, threads)
        J = Jl if Jl is not None else (J if prev is not None else None)
        X, beta = _unpack(u, N, M)
        history.append({"r": rr.tolist(), "iterations": len(hist) - 1, "residuals": hist})
        if verbose:
            print(f"r={rr} iterations={len(hist) - 1} residual={hist[-1]:.2e}")
        prev = rr
    state = SteadyState(r, X, beta, mu, ev, M, n_theta, n_rad, history=history)
    state.diagnostics = {
        "residual_norm": history[-1]["residuals"][-1],
        "critical_point": rep.X.tolist(),
        "hessian_eigs": rep.hessian_eigs.tolist(),
        "mode3_amplitude": [float(np.hypot(*beta[j, 0])) for j in range(N)],
        "beta_norm": [float(np.linalg.norm(beta[j])) for j in range(N)],
        "preconditioned_cond": (float(np.linalg.cond(np.linalg.solve(P, J)))
                                if J is not None else None),
        "smallest_r": float(r.min()),
    }
    state.diagnostics.update(verify_steady(state))
    return state


def continuation_schedule(r_target, start, factor=0.5):
    """Geometric radii start, start*factor, ... ending exactly at r_target."""
    r_target = np.atleast_1d(np.asarray(r_target, float))
    rmax = r_target.max()
    out = [r_target]
    s = 1.0
    while rmax / (s * factor) <= start:
        s *= factor
        out.append(r_target / s)
    return out[::-1]


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _self_potential_quad(shape: PatchShape, theta):
    """(1/2pi) int log|x - y| dy at x = Gamma(theta) by adaptive quadrature."""
    def Gam(t):
        z = np.exp(1j * t)
        return shape.gamma(z), 1j * z * shape.dgamma(z)

    x, _ = Gam(np.array([theta]))
    x = x[0]

    def f(t):
        y, dy = Gam(np.array([t]))
        d = y[0] - x
        a = abs(d)
        if a == 0:
            return 0.0
        return (np.conj(d) * dy[0]).imag * (2 * np.log(a) - 1)

    v, _ = integrate.quad(f, theta, theta + 2 * np.pi, limit=400, epsabs=1e-14, epsrel=1e-13)
    return v / (8 * np.pi)


def independent_boundary_stream(state: SteadyState, n_check=48):
    """Psi on each boundary from adaptive self quadrature and a doubled tensor grid."""
    shapes = state.shapes()
    base = state.system()
    fine = PatchSystem(state.ev, state.mu, shapes, 2 * base.n + 6, 2 * base.n_rad, check=False)
    th = nodes(n_check) + 0.5 * np.pi / n_check
    out = []
    for j, s in enumerate(shapes):
        z = np.exp(1j * th)
        x = s.gamma(z)
        v = fine._smooth_part(x)
        v = v + fine.omega[j] * np.array([_self_potential_quad(s, t) for t in th])
        for k, sk in enumerate(fine.samples):
            if k != j:
                v = v + fine.omega[k] * log_potential(sk.g, sk.dg, x)
        out.append(v)
    return out


def verify_steady(state: SteadyState, tol_osc=1e-9, tol_area=1e-10, n_check=48) -> dict:
    psi = independent_boundary_stream(state, n_check)
    osc = [float(np.abs(p - p.mean()).max()) for p in psi]
    sys = state.system()
    area_err = [abs(enclosed_area(s) - np.pi * s.r ** 2) for s in sys.shapes]
    budget = [float(om * sm.area_w.sum() - m) for om, sm, m in zip(sys.omega, sys.samples, sys.mu)]
    return {
        "boundary_stream_oscillation": osc,
        "area_error": area_err,
        "vorticity_budget": budget,
        "oscillation_ok": bool(max(osc) <= tol_osc),
        "area_ok": bool(max(area_err) <= tol_area),
        "budget_ok": bool(max(abs(b) for b in budget) <= 1e-12 * max(1.0, np.abs(state.mu).max())),
    }
