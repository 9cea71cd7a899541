"""Kirchhoff-Routh point-vortex dynamics on a bounded domain.

    H(X) = - sum_l sum_j c_l mu_j H_l(x_j) + sum_j mu_j^2 g(x_j)
           + 1/2 sum_{j != k} mu_j mu_k G0(x_j, x_k),     g(x) = 1/2 (G0 - log part)(x, x)

    dX/dt = Lambda^{-1} J_N grad H(X)

with Lambda = diag(mu_j I_2) and J the rotation by +pi/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import GreenEvaluator
from .errors import (CollidingVortices, CollisionDetected, LeftDomain,
                     NewtonSubstepFailure, NoConvergence)

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def symplectic(mu):
    """Lambda^{-1} J_N as a dense 2N x 2N matrix."""
    mu = np.asarray(mu, float)
    return np.kron(np.diag(1.0 / mu), J2)


@dataclass
class VortexConfig:
    ev: GreenEvaluator
    mu: np.ndarray
    X: np.ndarray
    rho: float | None = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, float)
        self.X = np.asarray(self.X, float).reshape(-1)
        if np.any(self.mu == 0):
            raise ValueError("vortex strengths must be nonzero")
        if self.X.size != 2 * self.mu.size:
            raise ValueError("X must have 2N entries")
        if self.rho is None:
            self.rho = 0.05 * self.ev.diameter()

    @property
    def N(self):
        return self.mu.size

    def with_X(self, X):
        return VortexConfig(self.ev, self.mu, np.asarray(X, float), self.rho)


def _points(X):
    X = np.asarray(X, float).reshape(-1, 2)
    return X[:, 0] + 1j * X[:, 1]


def in_sigma_rho(cfg: VortexConfig, X=None, rho=None) -> bool:
    z = _points(cfg.X if X is None else X)
    rho = cfg.rho if rho is None else rho
    if not np.all(cfg.ev.contains(z)):
        return False
    if np.any(cfg.ev.boundary_distance(z) <= rho):
        return False
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d > rho))


def _check_pairs(z):
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    if d.size and d.min() < 1e-12:
        raise CollidingVortices("two vortices coincide")


def hamiltonian(cfg: VortexConfig, X=None) -> float:
    z = _points(cfg.X if X is None else X)
    _check_pairs(z)
    ev, mu = cfg.ev, cfg.mu
    H = 0.0
    if ev.n:
        Hl = ev.harmonic_values(z)                 # (n, N)
        H -= float(ev.c @ Hl @ mu)
    H += float(np.sum(mu ** 2 * 0.5 * ev.reg0_values(z, z)))
    for j in range(len(z)):
        for k in range(j + 1, len(z)):
            g0 = -np.log(abs(z[j] - z[k])) / (2 * np.pi) + ev.reg0_values(z[j], z[k])
            H += mu[j] * mu[k] * float(g0)
    return H


def grad_hessian(cfg: VortexConfig, X=None):
    """Analytic gradient and Hessian of H (2N vector, 2N x 2N matrix)."""
    z = _points(cfg.X if X is None else X)
    _check_pairs(z)
    ev, mu = cfg.ev, cfg.mu
    N = len(z)
    g = np.zeros(2 * N)
    Hs = np.zeros((2 * N, 2 * N))
    for j in range(N):
        sj = slice(2 * j, 2 * j + 2)
        if ev.n:
            _, gl, hl = ev.harmonic_jet(z[j])
            g[sj] -= mu[j] * (ev.c @ gl)
            Hs[sj, sj] -= mu[j] * np.einsum("l,lab->ab", ev.c, hl)
        jt = ev.reg0_jet(z[j], z[j])
        g[sj] += mu[j] ** 2 * 0.5 * (jt.g1 + jt.g2)
        Hs[sj, sj] += mu[j] ** 2 * 0.5 * (jt.h11 + jt.h12 + jt.h12.T + jt.h22)
        for k in range(j + 1, N):
            sk = slice(2 * k, 2 * k + 2)
            jt = ev.g0_jet(z[j], z[k])
            m = mu[j] * mu[k]
            g[sj] += m * jt.g1
            g[sk] += m * jt.g2
            Hs[sj, sj] += m * jt.h11
            Hs[sk, sk] += m * jt.h22
            Hs[sj, sk] += m * jt.h12
            Hs[sk, sj] += m * jt.h12.T
    return g, Hs


def velocity(cfg: VortexConfig, X=None):
    g, _ = grad_hessian(cfg, X)
    return symplectic(cfg.mu) @ g


@dataclass
class CriticalPointReport:
    X: np.ndarray
    grad_norm: float
    hessian: np.ndarray
    hessian_eigs: np.ndarray
    nondegenerate: bool
    definite: str
    iterations: int = 0
    history: list = field(default_factory=list)

    def to_dict(self):
        return {"X": self.X.tolist(), "grad_norm": self.grad_norm,
                "hessian": self.hessian.tolist(), "hessian_eigs": self.hessian_eigs.tolist(),
                "nondegenerate": self.nondegenerate, "definite": self.definite,
                "iterations": self.iterations}


def classify_hessian(Hs, deg_tol=1e-8):
    eig = np.linalg.eigvalsh(0.5 * (Hs + Hs.T))
    scale = max(1.0, np.abs(eig).max()) if eig.size else 1.0
    nondeg = bool(np.abs(eig).min() > deg_tol * scale) if eig.size else True
    if np.all(eig > 0):
        sign = "positive"
    elif np.all(eig < 0):
        sign = "negative"
    else:
        sign = "indefinite"
    return eig, nondeg, sign


def find_critical(cfg: VortexConfig, X0=None, tol=1e-12, max_iter=50) -> CriticalPointReport:
    """Newton on grad H with a backtracking line search on |grad H|^2."""
    X = np.asarray(cfg.X if X0 is None else X0, float).copy()
    if not in_sigma_rho(cfg, X):
        raise LeftDomain("starting configuration is not in Sigma_rho")
    g, Hs = grad_hessian(cfg, X)
    hist = [float(np.linalg.norm(g))]
    it = 0
    while hist[-1] > tol:
        if it >= max_iter:
            raise NoConvergence(f"|grad H| = {hist[-1]:.3e} after {max_iter} Newton steps")
        try:
            step = -np.linalg.solve(Hs, g)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(Hs, g, rcond=None)[0]
        lam, f0 = 1.0, hist[-1] ** 2
        while True:
            Xn = X + lam * step
            if in_sigma_rho(cfg, Xn):
                gn, Hn = grad_hessian(cfg, Xn)
                if gn @ gn <= (1 - 1e-4 * lam) * f0 or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise LeftDomain("Newton iterate leaves Sigma_rho")
        if not in_sigma_rho(cfg, Xn):
            raise LeftDomain("Newton iterate leaves Sigma_rho")
        X, g, Hs = Xn, gn, Hn
        it += 1
        hist.append(float(np.linalg.norm(g)))
        if it > 3 and hist[-1] >= hist[-2] and hist[-1] < 1e3 * np.finfo(float).eps * max(1.0, np.abs(Hs).max()):
            break   # roundoff floor
    Hs = 0.5 * (Hs + Hs.T)
    eig, nondeg, sign = classify_hessian(Hs)
    return CriticalPointReport(X, hist[-1], Hs, eig, nondeg, sign, it, hist)


def integrate_pv(cfg: VortexConfig, X0=None, T=1.0, dt=1e-2, newton_tol=1e-14):
    """Implicit midpoint rule.  Returns (times, trajectory (steps+1, 2N), H values)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    X = np.asarray(cfg.X if X0 is None else X0, float).copy()
    if not in_sigma_rho(cfg, X):
        raise LeftDomain("initial configuration is not in Sigma_rho")
    S = symplectic(cfg.mu)
    nsteps = int(round(T / dt))
    traj = [X.copy()]
    Hv = [hamiltonian(cfg, X)]
    for _ in range(nsteps):
        X = midpoint_step(cfg, X, dt, S, newton_tol)
        z = _points(X)
        d = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(d, np.inf)
        if (d.size and d.min() < cfg.rho / 10) or np.any(cfg.ev.boundary_distance(z) < cfg.rho / 10):
            raise CollisionDetected("vortex separation dropped below rho/10")
        traj.append(X.copy())
        Hv.append(hamiltonian(cfg, X))
    t = dt * np.arange(nsteps + 1)
    return t, np.array(traj), np.array(Hv)


def midpoint_step(cfg, X, dt, S=None, tol=1e-14, max_iter=20):
    S = symplectic(cfg.mu) if S is None else S
    g, _ = grad_hessian(cfg, X)
    Y = X + dt * S @ g          # explicit Euler predictor
    I = np.eye(X.size)
    for _ in range(max_iter):
        m = 0.5 * (X + Y)
        g, Hs = grad_hessian(cfg, m)
        res = Y - X - dt * S @ g
        if np.linalg.norm(res) <= tol * max(1.0, np.linalg.norm(X)):
            return Y
        Y = Y - np.linalg.solve(I - 0.5 * dt * S @ Hs, res)
    m = 0.5 * (X + Y)
    g, _ = grad_hessian(cfg, m)
    if np.linalg.norm(Y - X - dt * S @ g) > 1e3 * tol * max(1.0, np.linalg.norm(X)):
        raise NewtonSubstepFailure("implicit midpoint stage did not converge")
    return Y
