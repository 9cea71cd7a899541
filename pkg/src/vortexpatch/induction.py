"""Stream function of a system of uniform vortex patches, sampled on patch boundaries.

Psi = Delta_0^{-1} omega + sum_l c_l H_l, with omega = mu_j / (pi r_j^2) on Omega_j.
Split per target x:

    Psi(x) = sum_k w_k [P_k(x) - A_k(x)] + sum_l c_l H_l(x)

    P_k(x) = (1/2pi) int_{Omega_k} log|x - y| dy       (Newtonian part)
    A_k(x) = int_{Omega_k} reg0(x, y) dy                 (smooth part of G0)

P_k is reduced to a boundary integral by Green's identity,
    P(x) = (1/8pi) oint (y - x).n (2 log|y - x| - 1) ds_y,
and on its own boundary the log singularity is handled with the periodic
log-kernel (Kress / Martensen-Kussmaul) weights.  A_k and H_l use a tensor
Gauss-Legendre x trapezoid rule in conformal coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import GreenEvaluator
from .errors import OnInterface, PatchOverlap, QuadratureNotConverged
from .patchgeom import (BoundaryFunction, PatchShape, dtn, nodes,
                        spectral_derivative)

TWO_PI = 2 * np.pi


@lru_cache(maxsize=32)
def kress_weights(n: int) -> np.ndarray:
    """Circulant matrix R with int log(4 sin^2((s - t)/2)) f(t) dt ~ R @ f."""
    if n % 2:
        raise ValueError("Kress quadrature needs an even node count")
    m = n // 2
    d = nodes(n)
    k = np.arange(1, m)
    col = -(TWO_PI / m) * (np.cos(np.outer(d, k)) / k).sum(1) - (np.pi / m ** 2) * np.cos(m * d)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    R = col[idx]
    R.setflags(write=False)
    return R


def self_log_potential(g, dg):
    """P(x_i) = (1/2pi) int_Omega log|x_i - y| dy at the boundary nodes x_i = g_i.

    g, dg: boundary samples and d/dtheta at n equispaced nodes (CCW)."""
    n = len(g)
    th = nodes(n)
    diff = g[None, :] - g[:, None]                # y(t_j) - x(s_i)
    D = (np.conj(diff) * dg[None, :]).imag
    s = th[:, None] - th[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.log(np.abs(diff) / np.abs(2 * np.sin(s / 2)))
    np.fill_diagonal(lam, np.log(np.abs(dg)))
    K1 = D / (8 * np.pi)
    K2 = D * (2 * lam - 1) / (8 * np.pi)
    R = kress_weights(n)
    return (R * K1).sum(1) + K2.sum(1) * (TWO_PI / n)


def log_potential(g, dg, x):
    """Same potential at off-curve points x (plain trapezoid)."""
    x = np.asarray(x, complex)
    diff = g[None, :] - x.reshape(-1, 1)
    D = (np.conj(diff) * dg[None, :]).imag
    v = (D * (2 * np.log(np.abs(diff)) - 1)).sum(1) * (TWO_PI / len(g)) / (8 * np.pi)
    return v.reshape(x.shape)


def log_potential_grad(g, dg, x):
    """Complex gradient (d/dx + i d/dy) of the potential at off-curve points."""
    x = np.asarray(x, complex)
    diff = g[None, :] - x.reshape(-1, 1)
    v = 1j * (np.log(np.abs(diff)) * dg[None, :]).sum(1) * (TWO_PI / len(g)) / TWO_PI
    return v.reshape(x.shape)


def self_stream_h(beta, n=None) -> BoundaryFunction:
    """h(beta): d/dtheta of the unit-strength self potential on the patch boundary.

    Computed on the r = 1 shape; the result does not depend on r."""
    shape = PatchShape(1.0, 0j, beta).check()
    n = n or max(4 * shape.M, 64)
    th = nodes(n)
    z = np.exp(1j * th)
    g = shape.gamma(z)
    dg = 1j * z * shape.dgamma(z)
    ht = self_log_potential(g, dg) / np.pi
    return BoundaryFunction.from_samples(spectral_derivative(ht), shape.M)


def dh0_apply(alpha) -> BoundaryFunction:
    """Closed form of Dh(0): shape mode l+1 (A, B) -> (l-1)/(2pi) (B cos l - A sin l)."""
    alpha = np.asarray(alpha, float).reshape(-1, 2)
    M = alpha.shape[0] + 2
    ab = np.zeros((M + 1, 2))
    l = np.arange(2, M)
    ab[2:M, 0] = (l - 1) / TWO_PI * alpha[:, 1]
    ab[2:M, 1] = -(l - 1) / TWO_PI * alpha[:, 0]
    return BoundaryFunction(ab)


@dataclass
class PatchSamples:
    theta: np.ndarray
    z: np.ndarray
    g: np.ndarray          # Gamma(e^{i theta})
    dgz: np.ndarray        # Gamma'(z)
    dg: np.ndarray         # d/dtheta Gamma
    area_pts: np.ndarray
    area_w: np.ndarray


class PatchSystem:
    """Patches with uniform vorticity mu_j / (pi r_j^2) inside a domain."""

    def __init__(self, ev: GreenEvaluator, mu, shapes, n_theta=None, n_rad=16, check=True):
        self.ev = ev
        self.mu = np.asarray(mu, float).reshape(-1)
        self.shapes = list(shapes)
        if len(self.shapes) != self.mu.size:
            raise ValueError("one shape per strength required")
        Mmax = max(s.M for s in self.shapes)
        self.n = int(n_theta or max(4 * Mmax, 64))
        self.n += self.n % 2
        self.n_rad = int(n_rad)
        for s in self.shapes:
            s.check()
        self.omega = np.array([m / (np.pi * s.r ** 2) for m, s in zip(self.mu, self.shapes)])
        self.samples = [self._sample(s) for s in self.shapes]
        if check:
            self._check_layout()

    @property
    def N(self):
        return len(self.shapes)

    def _sample(self, s: PatchShape) -> PatchSamples:
        th = nodes(self.n)
        z = np.exp(1j * th)
        g = s.gamma(z)
        dgz = s.dgamma(z)
        xg, wg = np.polynomial.legendre.leggauss(self.n_rad)
        rho = 0.5 * (xg + 1)
        wr = 0.5 * wg
        zz = rho[:, None] * z[None, :]
        jac = np.abs(s.dgamma(zz)) ** 2
        w = (wr * rho)[:, None] * jac * (TWO_PI / self.n)
        return PatchSamples(th, z, g, dgz, 1j * z * dgz, s.gamma(zz).reshape(-1), w.reshape(-1))

    def _check_layout(self):
        for j, sj in enumerate(self.samples):
            if not np.all(self.ev.contains(sj.g)):
                raise PatchOverlap(f"patch {j} is not inside the domain")
            for k in range(j + 1, self.N):
                sk = self.samples[k]
                if np.abs(sj.g[:, None] - sk.g[None, :]).min() < 1e-12 \
                        or _inside(sk.g, sj.g[:1])[0] or _inside(sj.g, sk.g[:1])[0]:
                    raise PatchOverlap(f"patches {j} and {k} overlap")
                if np.any(_inside(sk.g, sj.g)) or np.any(_inside(sj.g, sk.g)):
                    raise PatchOverlap(f"patches {j} and {k} overlap")

    def with_shapes(self, shapes, check=True):
        return PatchSystem(self.ev, self.mu, shapes, self.n, self.n_rad, check)

    # ------------------------------------------------------------------
    def _smooth_part(self, x):
        """sum_k -w_k A_k(x) + sum_l c_l H_l(x) at arbitrary points."""
        x = np.asarray(x, complex).reshape(-1)
        src = np.concatenate([s.area_pts for s in self.samples])
        wts = np.concatenate([-om * s.area_w for om, s in zip(self.omega, self.samples)])
        v = self.ev.reg0_integrals(x, src, wts)
        if self.ev.n:
            v = v + self.ev.c @ self.ev.harmonic_values(x)
        return v

    def boundary_stream(self):
        """Psi at the boundary nodes of each patch (list of length-n arrays)."""
        allg = np.concatenate([s.g for s in self.samples])
        smooth = self._smooth_part(allg).reshape(self.N, self.n)
        out = []
        for j, sj in enumerate(self.samples):
            v = smooth[j] + self.omega[j] * self_log_potential(sj.g, sj.dg)
            for k, sk in enumerate(self.samples):
                if k != j:
                    v = v + self.omega[k] * log_potential(sk.g, sk.dg, sj.g)
            out.append(v)
        return out

    def phi_samples(self, psi=None):
        psi = self.boundary_stream() if psi is None else psi
        return [spectral_derivative(p) for p in psi]

    def normal_derivative(self, psi=None):
        """|dGamma|^{-1} (d_N Psi) o Gamma_j at the boundary nodes.

        Psi - w_j |x - x_j|^2 / 4 is harmonic in Omega_j, so its radial derivative in
        conformal coordinates follows from the disk Dirichlet-to-Neumann map."""
        psi = self.boundary_stream() if psi is None else psi
        out = []
        for j, (s, sm) in enumerate(zip(self.shapes, self.samples)):
            rel = sm.g - s.x
            q = np.abs(rel) ** 2 / 4
            dq = 0.5 * (np.conj(rel) * sm.z * sm.dgz).real
            drho = dtn(psi[j] - self.omega[j] * q) + self.omega[j] * dq
            out.append(drho / np.abs(sm.dgz) ** 2)
        return out

    # ------------------------------------------------------------------
    def stream_at(self, x):
        """Psi at points off every patch boundary."""
        x = np.asarray(x, complex)
        xf = x.reshape(-1)
        self._check_off_interface(xf)
        v = self._smooth_part(xf)
        for om, sm, s in zip(self.omega, self.samples, self.shapes):
            g, dg = self._fine_boundary(s, sm, xf)
            v = v + om * log_potential(g, dg, xf)
        return v.reshape(x.shape)

    def _fine_boundary(self, s, sm, x):
        d = np.abs(x[:, None] - sm.g[None, :]).min() if x.size else 1.0
        h = TWO_PI * s.r / self.n
        if d > 4 * h:
            return sm.g, sm.dg
        n = int(min(2 ** 15, max(self.n, 2 ** np.ceil(np.log2(8 * TWO_PI * s.r / max(d, 1e-12))))))
        z = np.exp(1j * nodes(n))
        return s.gamma(z), 1j * z * s.dgamma(z)

    def _check_off_interface(self, x):
        for j, s in enumerate(self.shapes):
            z = np.exp(1j * nodes(max(8 * self.n, 1024)))
            g = s.gamma(z)
            d = np.abs(x[:, None] - g[None, :]).min(1) if x.size else np.zeros(0)
            if np.any(d < 1e-6):
                raise OnInterface(f"point within 1e-6 of patch {j} boundary")

    def velocity(self, x, h=1e-5):
        """u = J grad Psi at points, returned as (m, 2)."""
        x = np.asarray(x, float).reshape(-1, 2)
        xc = x[:, 0] + 1j * x[:, 1]
        self._check_off_interface(xc)
        grad = np.zeros(len(xc), complex)
        for om, sm, s in zip(self.omega, self.samples, self.shapes):
            g, dg = self._fine_boundary(s, sm, xc)
            grad = grad + om * log_potential_grad(g, dg, xc)
        sc = h * max(1.0, self.ev.diameter())
        pts = np.concatenate([xc + sc, xc - sc, xc + 1j * sc, xc - 1j * sc])
        sv = self._smooth_part(pts).reshape(4, -1)
        grad = grad + (sv[0] - sv[1]) / (2 * sc) + 1j * (sv[2] - sv[3]) / (2 * sc)
        # J = rotation by +pi/2: (a, b) -> (-b, a)
        return np.column_stack([-grad.imag, grad.real])

    # ------------------------------------------------------------------
    def energy(self, return_parts=False):
        """E_p, kinetic energy of the patch flow plus the circulation term."""
        psi_self = []
        self_log = np.zeros(self.N)
        for j, (s, sm) in enumerate(zip(self.shapes, self.samples)):
            P = self_log_potential(sm.g, sm.dg)
            psi_self.append(P)
            rel = sm.g - s.x
            q = np.abs(rel) ** 2 / 4
            dq = 0.5 * (np.conj(rel) * sm.z * sm.dgz).real
            dP = dtn(P - q) + dq
            qa = np.abs(sm.area_pts - s.x) ** 2 / 4
            self_log[j] = np.sum(P * dq - q * dP) * (TWO_PI / self.n) + qa @ sm.area_w
        # double integrals of G0 = -(1/2pi) log + reg0
        GG = np.zeros((self.N, self.N))
        for j, sj in enumerate(self.samples):
            for k, sk in enumerate(self.samples):
                if j == k:
                    logpart = self_log[j]
                else:
                    logpart = log_potential(sk.g, sk.dg, sj.area_pts) @ sj.area_w
                reg = self.ev.reg0_integrals(sj.area_pts, sk.area_pts, sk.area_w) @ sj.area_w
                GG[j, k] = -logpart + reg
        GG = 0.5 * (GG + GG.T)
        kinetic = 0.5 * self.omega @ GG @ self.omega
        circ = 0.0
        if self.ev.n:
            for om, sm in zip(self.omega, self.samples):
                circ -= om * float(self.ev.c @ self.ev.harmonic_integrals(sm.area_pts, sm.area_w))
            circ += 0.5 * float(np.asarray(self.ev.spec.circulations) @ self.ev.Ninv
                                @ np.asarray(self.ev.spec.circulations))
        E = kinetic + circ
        if return_parts:
            selfE = -0.5 * self.omega ** 2 * self_log
            return E, {"kinetic": kinetic, "circulation": circ, "self_log": selfE, "pair": GG}
        return E


def _inside(curve, pts):
    """Winding-number test of points against a closed polygon."""
    pts = np.asarray(pts, complex).reshape(-1)
    d = curve[None, :] - pts[:, None]
    ang = np.angle(np.roll(d, -1, axis=1) / d).sum(1)
    return np.abs(ang) > np.pi


def stream_on_boundary(sys: PatchSystem):
    """phi_j = d/dtheta (Psi o Gamma_j) as BoundaryFunctions."""
    return [BoundaryFunction.from_samples(p, sys.n // 2 - 1) for p in sys.phi_samples()]


def velocity_field(sys: PatchSystem, points):
    return sys.velocity(points)


def patch_energy(sys: PatchSystem) -> float:
    return sys.energy()


def check_quadrature(sys: PatchSystem, tol=1e-9):
    """Order-doubling check of the boundary stream derivative."""
    fine = PatchSystem(sys.ev, sys.mu, sys.shapes, 2 * sys.n, 2 * sys.n_rad, check=False)
    a = sys.phi_samples()
    b = fine.phi_samples()
    err = max(np.abs(x - y[::2]).max() for x, y in zip(a, b))
    if err > tol:
        raise QuadratureNotConverged(f"phi changed by {err:.2e} under order doubling")
    return err
