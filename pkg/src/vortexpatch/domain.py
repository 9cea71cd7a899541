"""Dirichlet Green functions, harmonic measures and the modified kernel G0.

Points are handled as complex numbers internally; public entry points also
accept length-2 real arrays.  Conventions:

    G(x, y)  = -(1/2pi) log|x - y| + gt(x, y),     -Lap_y G = delta_x,  G = 0 on the boundary
    H_j      harmonic, = 1 on the j-th inner curve, 0 on the others (j = 1..n)
    Nmat_jk  = flux of grad H_k through C_j (outward from the fluid)
    G0       = G + sum_jk Ninv_jk H_j(x) H_k(y)

Three evaluators share one interface: closed forms for the disk and the
annulus, and a Nystrom double-layer solver for general smooth boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (CoincidentPoints, ExteriorPoint, IllConditioned,
                     IndexOutOfRange, SingularBoundary)

TWO_PI = 2.0 * np.pi


def as_complex(p):
    """(..., 2) real array or complex array -> complex array."""
    a = np.asarray(p)
    if np.iscomplexobj(a):
        return a
    a = a.astype(float)
    if a.shape[-1:] != (2,):
        raise ValueError("points must have a trailing dimension of size 2")
    return a[..., 0] + 1j * a[..., 1]


# ---------------------------------------------------------------------------
# derivative bookkeeping for Re F with F holomorphic
# ---------------------------------------------------------------------------

def _grad(c, conj=False):
    # gradient of Re F(z) (or Re F(zbar)) from the complex derivative c
    return np.array([c.real, c.imag]) if conj else np.array([c.real, -c.imag])


def _hess(c, conj=False):
    a, b = c.real, c.imag
    if conj:
        return np.array([[a, b], [b, -a]])
    return np.array([[a, -b], [-b, -a]])


def _mixed(c, conj=False):
    # d^2/dz_a dw_b of Re F(z, w) or Re F(z, wbar)
    a, b = c.real, c.imag
    if conj:
        return np.array([[a, b], [-b, a]])
    return np.array([[a, -b], [-b, -a]])


@dataclass
class PairJet:
    """Value and first/second derivatives of a two-point kernel K(x, y)."""
    val: float = 0.0
    g1: np.ndarray = field(default_factory=lambda: np.zeros(2))
    g2: np.ndarray = field(default_factory=lambda: np.zeros(2))
    h11: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    h12: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    h22: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __add__(self, o):
        return PairJet(self.val + o.val, self.g1 + o.g1, self.g2 + o.g2,
                       self.h11 + o.h11, self.h12 + o.h12, self.h22 + o.h22)

    def scaled(self, s):
        return PairJet(s * self.val, s * self.g1, s * self.g2,
                       s * self.h11, s * self.h12, s * self.h22)

    def swapped(self):
        return PairJet(self.val, self.g2, self.g1, self.h22, self.h12.T, self.h11)


def _logterm(c, z, u, a, b):
    """F = log(1 - c z^a u^b) and its derivatives in z and u."""
    def mono(p, q, k):
        # k * c z^p u^q, written so that z = 0 or u = 0 is harmless for p, q >= 0
        return 0.0 if k == 0 else k * c * z ** p * u ** q

    E = c * z ** a * u ** b
    Ez, Eu = mono(a - 1, b, a), mono(a, b - 1, b)
    Ezz, Euu = mono(a - 2, b, a * (a - 1)), mono(a, b - 2, b * (b - 1))
    Ezu = mono(a - 1, b - 1, a * b)
    d = 1.0 - E
    F = np.log(d)
    Fz, Fu = -Ez / d, -Eu / d
    Fzz = -Ezz / d - Ez ** 2 / d ** 2
    Fuu = -Euu / d - Eu ** 2 / d ** 2
    Fzu = -Ezu / d - Ez * Eu / d ** 2
    return F, Fz, Fzz, Fu, Fuu, Fzu


def _jet_of(coef, F, Fz, Fzz, Fu, Fuu, Fzu, conj):
    return PairJet(coef * F.real, coef * _grad(Fz), coef * _grad(Fu, conj),
                   coef * _hess(Fzz), coef * _mixed(Fzu, conj), coef * _hess(Fuu, conj))


def log_jet(z, w):
    """Jet of -(1/2pi) log|z - w|."""
    d = z - w
    if abs(d) < 1e-300:
        raise CoincidentPoints("x = y")
    c = -1.0 / TWO_PI
    return _jet_of(c, np.log(d), 1 / d, -1 / d ** 2, -1 / d, -1 / d ** 2, 1 / d ** 2, False)


# ---------------------------------------------------------------------------
# specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    kind: str                       # "disk" | "annulus" | "bem"
    radius: float = 1.0             # disk radius
    inner_radius: float | None = None
    curves: tuple = ()              # bem: sequence of (n_k, 2) sample arrays, curve 0 exterior
    circulations: tuple = ()

    @property
    def n_holes(self) -> int:
        if self.kind == "disk":
            return 0
        if self.kind == "annulus":
            return 1
        return len(self.curves) - 1

    def validate(self):
        if self.kind not in ("disk", "annulus", "bem"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "annulus":
            a = self.inner_radius
            if a is None or not (0.0 < a < 1.0):
                raise ValueError("annulus inner_radius must lie in (0, 1)")
        if self.kind == "bem":
            if len(self.curves) < 1:
                raise ValueError("bem domain needs at least one curve")
            for k, c in enumerate(self.curves):
                if len(c) < 32:
                    raise ValueError(f"curve {k} has fewer than 32 samples")
        if len(self.circulations) != self.n_holes:
            raise ValueError("circulations must have one entry per inner boundary curve")


def disk(radius=1.0):
    return DomainSpec("disk", radius=radius)


def annulus(inner_radius, circulations=(0.0,)):
    return DomainSpec("annulus", inner_radius=inner_radius, circulations=tuple(circulations))


def bem_from_curves(curves, circulations=()):
    return DomainSpec("bem", curves=tuple(np.asarray(c, float) for c in curves),
                      circulations=tuple(circulations))


def ellipse_curve(a, b, n=256, center=(0.0, 0.0), clockwise=False):
    t = TWO_PI * np.arange(n) / n
    if clockwise:
        t = -t
    return np.column_stack([center[0] + a * np.cos(t), center[1] + b * np.sin(t)])


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

class GreenEvaluator:
    """Common machinery; subclasses supply gt, H_j and their jets."""

    spec: DomainSpec
    Nmat: np.ndarray
    Ninv: np.ndarray
    c: np.ndarray

    def _finish(self):
        n = self.spec.n_holes
        if n == 0:
            self.Nmat = np.zeros((0, 0))
            self.Ninv = np.zeros((0, 0))
            self.c = np.zeros(0)
            return
        N = self.Nmat
        if not np.allclose(N, N.T, rtol=1e-6, atol=1e-9):
            raise IllConditioned("circulation matrix is not symmetric")
        N = 0.5 * (N + N.T)
        if np.linalg.eigvalsh(N).min() <= 0:
            raise IllConditioned("circulation matrix is not positive definite")
        self.Nmat = N
        self.Ninv = np.linalg.inv(N)
        self.c = self.Ninv @ np.asarray(self.spec.circulations, float)

    @property
    def n(self) -> int:
        return self.spec.n_holes

    # --- geometry
    def contains(self, z) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, z) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def boundary_points(self, n=256) -> list:
        raise NotImplementedError

    def _check_interior(self, *pts):
        for p in pts:
            if not np.all(self.contains(p)):
                raise ExteriorPoint("point outside the domain")

    # --- vectorised values (complex arrays, broadcasting)
    def gt_values(self, z, w):
        raise NotImplementedError

    def harmonic_values(self, z):
        """Array of shape (n,) + z.shape with H_1..H_n."""
        raise NotImplementedError

    def reg0_values(self, z, w):
        """gt + sum Ninv H H, i.e. G0 + (1/2pi) log|z - w|."""
        v = self.gt_values(z, w)
        if self.n:
            hz = self.harmonic_values(z)
            hw = self.harmonic_values(w)
            v = v + np.einsum("i...,ij,j...->...", hz, self.Ninv, hw)
        return v

    def reg0_matrix(self, targets, sources):
        t = np.asarray(targets).reshape(-1)
        s = np.asarray(sources).reshape(-1)
        return self.reg0_values(t[:, None], s[None, :])

    def reg0_integrals(self, targets, sources, weights):
        """sum_s w_s (gt + Ninv H H)(t, s) for every target t."""
        return self.reg0_matrix(targets, sources) @ np.asarray(weights).reshape(-1)

    def harmonic_integrals(self, sources, weights):
        if not self.n:
            return np.zeros(0)
        return self.harmonic_values(np.asarray(sources).reshape(-1)) @ np.asarray(weights).reshape(-1)

    # --- jets (scalar points)
    def gt_jet(self, z, w) -> PairJet:
        raise NotImplementedError

    def harmonic_jet(self, z):
        """(values (n,), gradients (n, 2), Hessians (n, 2, 2))."""
        raise NotImplementedError

    def reg0_jet(self, z, w) -> PairJet:
        jet = self.gt_jet(z, w)
        if self.n:
            hz, gz, Hz = self.harmonic_jet(z)
            hw, gw, Hw = self.harmonic_jet(w)
            Nv = self.Ninv
            jet = jet + PairJet(
                hz @ Nv @ hw,
                gz.T @ (Nv @ hw), gw.T @ (Nv.T @ hz),
                np.einsum("lab,l->ab", Hz, Nv @ hw),
                np.einsum("la,lm,mb->ab", gz, Nv, gw),
                np.einsum("mab,m->ab", Hw, Nv.T @ hz))
        return jet

    def g0_jet(self, z, w) -> PairJet:
        return log_jet(z, w) + self.reg0_jet(z, w)

    # --- public scalar API
    def green(self, x, y) -> float:
        z, w = complex(as_complex(x)), complex(as_complex(y))
        self._check_interior(z, w)
        if abs(z - w) == 0.0:
            raise CoincidentPoints("green(x, x) is singular")
        return float(-np.log(abs(z - w)) / TWO_PI + self.gt_values(z, w))

    def green_regular(self, x, y) -> float:
        z, w = complex(as_complex(x)), complex(as_complex(y))
        self._check_interior(z, w)
        return float(self.gt_values(z, w))

    def harmonic_measure(self, j, x) -> float:
        z = complex(as_complex(x))
        if j == 0:
            self._check_interior(z)
            return float(1.0 - np.sum(self.harmonic_values(np.array([z]))))
        if not (1 <= j <= self.n):
            raise IndexOutOfRange(f"harmonic measure index {j} not in 1..{self.n}")
        self._check_interior(z)
        return float(self.harmonic_values(np.array([z]))[j - 1, 0])

    def g0(self, x, y) -> float:
        z, w = complex(as_complex(x)), complex(as_complex(y))
        self._check_interior(z, w)
        if abs(z - w) == 0.0:
            raise CoincidentPoints("g0(x, x) is singular")
        return float(-np.log(abs(z - w)) / TWO_PI + self.reg0_values(z, w))


class DiskGreen(GreenEvaluator):
    def __init__(self, spec: DomainSpec):
        self.spec = spec
        self.R = float(spec.radius)
        self._finish()

    def contains(self, z):
        return np.abs(z) < self.R

    def boundary_distance(self, z):
        return self.R - np.abs(z)

    def diameter(self):
        return 2 * self.R

    def boundary_points(self, n=256):
        return [self.R * np.exp(1j * TWO_PI * np.arange(n) / n)]

    def gt_values(self, z, w):
        R2 = self.R ** 2
        return (np.log(self.R) + np.log(np.abs(1.0 - z * np.conj(w) / R2))) / TWO_PI

    def harmonic_values(self, z):
        return np.zeros((0,) + np.shape(z))

    def gt_jet(self, z, w):
        terms = _logterm(1.0 / self.R ** 2, z, np.conj(w), 1, 1)
        jet = _jet_of(1.0 / TWO_PI, *terms, conj=True)
        jet.val += np.log(self.R) / TWO_PI
        return jet

    def harmonic_jet(self, z):
        return np.zeros(0), np.zeros((0, 2)), np.zeros((0, 2, 2))


class AnnulusGreen(GreenEvaluator):
    """a < |x| < 1, via the image product P(t) = (1-t) prod_k (1-q^2k t)(1-q^2k/t), q = a."""

    def __init__(self, spec: DomainSpec, nterms=None):
        self.spec = spec
        self.a = float(spec.inner_radius)
        q2 = self.a ** 2
        # enough image pairs for q^(2k) below 1e-18
        self.K = nterms or max(2, int(np.ceil(np.log(1e-18) / np.log(q2))) + 1)
        self.loga = np.log(self.a)
        self.Nmat = np.array([[TWO_PI / np.log(1.0 / self.a)]])
        self._finish()

    def contains(self, z):
        r = np.abs(z)
        return (r > self.a) & (r < 1.0)

    def boundary_distance(self, z):
        r = np.abs(z)
        return np.minimum(1.0 - r, r - self.a)

    def diameter(self):
        return 2.0

    def boundary_points(self, n=256):
        t = np.exp(1j * TWO_PI * np.arange(n) / n)
        return [t, self.a * np.conj(t)]

    def _terms(self):
        q2 = self.a ** 2
        out = []   # (coef in front of Re F, c, a, b, conj)
        for k in range(1, self.K + 1):
            ck = q2 ** k
            out += [(-1.0, ck, 1, -1, False), (-1.0, ck, -1, 1, False),
                    (1.0, ck, 1, 1, True), (1.0, ck, -1, -1, True)]
        out.append((1.0, 1.0, 1, 1, True))
        return out

    def gt_values(self, z, w):
        z = np.asarray(z, complex)
        w = np.asarray(w, complex)
        s = np.zeros(np.broadcast(z, w).shape)
        for coef, c, a, b, conj in self._terms():
            u = np.conj(w) if conj else w
            s = s + coef * np.log(np.abs(1.0 - c * z ** a * u ** b))
        s = s + np.log(np.abs(w)) * np.log(np.abs(z)) / self.loga
        return s / TWO_PI

    def harmonic_values(self, z):
        return (np.log(np.abs(z)) / self.loga)[None, ...]

    def gt_jet(self, z, w):
        jet = PairJet()
        for coef, c, a, b, conj in self._terms():
            u = np.conj(w) if conj else w
            jet = jet + _jet_of(coef / TWO_PI, *_logterm(c, z, u, a, b), conj=conj)
        k = 1.0 / (TWO_PI * self.loga)
        lz, lw = np.log(abs(z)), np.log(abs(w))
        gz, gw = _grad(1 / z), _grad(1 / w)
        jet = jet + PairJet(k * lz * lw, k * lw * gz, k * lz * gw,
                            k * lw * _hess(-1 / z ** 2), k * np.outer(gz, gw),
                            k * lz * _hess(-1 / w ** 2))
        return jet

    def harmonic_jet(self, z):
        k = 1.0 / self.loga
        return (np.array([k * np.log(abs(z))]), k * _grad(1 / z)[None, :],
                k * _hess(-1 / z ** 2)[None, :, :])


# ---------------------------------------------------------------------------
# Nystrom double layer
# ---------------------------------------------------------------------------

def _spectral_derivatives(z):
    n = len(z)
    k = np.fft.fftfreq(n, 1.0 / n)
    zh = np.fft.fft(z)
    if n % 2 == 0:
        k1 = k.copy()
        k1[n // 2] = 0.0
    else:
        k1 = k
    dz = np.fft.ifft(1j * k1 * zh)
    d2z = np.fft.ifft(-(k ** 2) * zh)
    return dz, d2z


def _resample(z, n):
    m = len(z)
    if m == n:
        return z
    zh = np.fft.fft(z) / m
    out = np.zeros(n, complex)
    h = min(m, n) // 2
    out[:h] = zh[:h]
    out[-h:] = zh[-h:]
    return np.fft.ifft(out) * n


def _signed_area(z):
    return 0.5 * np.sum((np.conj(z) * np.roll(z, -1)).imag)


def _winding(z_curve, pts):
    """Winding number of a closed polygon around each point."""
    pts = np.asarray(pts, complex).reshape(-1)
    d = z_curve[None, :] - pts[:, None]
    ang = np.angle(np.roll(d, -1, axis=1) / d)
    return np.rint(ang.sum(axis=1) / TWO_PI)


def _segments_cross(a0, a1, b0, b1):
    def cross(u, v):
        return (np.conj(u) * v).imag
    d1 = cross(b1 - b0, a0 - b0)
    d2 = cross(b1 - b0, a1 - b0)
    d3 = cross(a1 - a0, b0 - a0)
    d4 = cross(a1 - a0, b1 - a0)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


class BemGreen(GreenEvaluator):
    """Interior Dirichlet solver: u = D[sigma] + sum_h A_h log|x - z_h|, with
    zero-mean densities on the inner curves.  Trapezoid (Nystrom) rule on the
    equispaced parametrisation; the double-layer kernel is smooth on smooth
    curves, so convergence is spectral.
    """

    cond_limit = 1e10

    def __init__(self, spec: DomainSpec, quadrature_order=None):
        self.spec = spec
        curves = []
        for k, c in enumerate(spec.curves):
            z = as_complex(np.asarray(c, float))
            if quadrature_order:
                z = _resample(z, int(quadrature_order))
            area = _signed_area(z)
            if area == 0:
                raise SingularBoundary(f"curve {k} encloses no area")
            # exterior curve counter-clockwise, holes clockwise
            if (k == 0) != (area > 0):
                z = z[::-1].copy()
                z = np.roll(z, 1)
            curves.append(z)
        self.curves = curves
        self._check_geometry()
        self._assemble()
        self._finish()

    def _check_geometry(self):
        for k, z in enumerate(self.curves):
            dz, _ = _spectral_derivatives(z)
            if np.min(np.abs(dz)) < 1e-8 * np.max(np.abs(dz)):
                raise SingularBoundary(f"curve {k} has a vanishing tangent")
            a0, a1 = z, np.roll(z, -1)
            n = len(z)
            for i in range(n):
                hit = _segments_cross(a0[i], a1[i], a0, a1)
                hit[[i, (i - 1) % n, (i + 1) % n]] = False
                if hit.any():
                    raise SingularBoundary(f"curve {k} is self-intersecting")
        outer = self.curves[0]
        for k, z in enumerate(self.curves[1:], start=1):
            if np.any(np.abs(_winding(outer, z)) != 1):
                raise SingularBoundary(f"curve {k} is not inside curve 0")
            for j, zz in enumerate(self.curves[1:], start=1):
                if j != k and np.any(_winding(zz, z) != 0):
                    raise SingularBoundary(f"curves {j} and {k} are nested or cross")
        self.hole_pts = []
        for z in self.curves[1:]:
            p = self._inner_point(z)
            self.hole_pts.append(p)
        self.hole_pts = np.array(self.hole_pts, complex)

    @staticmethod
    def _inner_point(z):
        c = z.mean()
        if abs(_winding(z, [c])[0]) == 1:
            return c
        # fall back: step inward from the point of largest curvature radius
        dz, _ = _spectral_derivatives(z)
        nrm = -1j * dz / np.abs(dz)
        for eps in (0.1, 0.03, 0.01):
            cand = z - eps * np.abs(z - c).max() * nrm   # normal points into the hole
            w = np.abs(_winding(z, cand)) == 1
            if w.any():
                return cand[np.argmax(w)]
        raise SingularBoundary("could not locate a point inside a hole")

    def _assemble(self):
        nodes, wts, kappa_ds, owner = [], [], [], []
        for k, z in enumerate(self.curves):
            n = len(z)
            dz, d2z = _spectral_derivatives(z)
            speed = np.abs(dz)
            kap = (np.conj(dz) * d2z).imag / speed ** 3
            nodes.append(z)
            wts.append(-1j * dz * (TWO_PI / n))          # n ds, complex
            kappa_ds.append(kap * speed * (TWO_PI / n))
            owner.append(np.full(n, k))
        self.t = np.concatenate(nodes)
        self.w = np.concatenate(wts)
        self.ds = np.abs(self.w)
        kds = np.concatenate(kappa_ds)
        self.owner = np.concatenate(owner)
        nb, nh = len(self.t), self.n
        d = self.t[None, :] - self.t[:, None]
        np.fill_diagonal(d, 1.0)
        K = -(self.w[None, :] / d).real / TWO_PI
        np.fill_diagonal(K, -kds / (2 * TWO_PI))
        M = np.zeros((nb + nh, nb + nh))
        M[:nb, :nb] = K - 0.5 * np.eye(nb)
        for h in range(nh):
            M[:nb, nb + h] = np.log(np.abs(self.t - self.hole_pts[h]))
            M[nb + h, :nb] = np.where(self.owner == h + 1, self.ds, 0.0)
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > self.cond_limit:
            raise IllConditioned(f"boundary system condition number {cond:.3g}")
        self.M = M
        self.lu = sla.lu_factor(M)
        self.nb = nb
        if nh:
            rhs = np.zeros((nb + nh, nh))
            for h in range(nh):
                rhs[:nb, h] = (self.owner == h + 1).astype(float)
            self.hsol = sla.lu_solve(self.lu, rhs)
            # flux of grad H_k into hole j is -2 pi A_j^(k)
            self.Nmat = -TWO_PI * self.hsol[nb:, :].T.copy()
        else:
            self.hsol = np.zeros((nb, 0))

    # --- geometry
    def contains(self, z):
        z = np.asarray(z, complex)
        flat = z.reshape(-1)
        inside = np.abs(_winding(self.curves[0], flat)) == 1
        for c in self.curves[1:]:
            inside &= _winding(c, flat) == 0
        return inside.reshape(z.shape)

    def boundary_distance(self, z):
        z = np.asarray(z, complex)
        d = np.abs(z.reshape(-1)[:, None] - self.t[None, :]).min(axis=1)
        return np.where(self.contains(z).reshape(-1), d, -d).reshape(z.shape)

    def diameter(self):
        z = self.curves[0]
        return float(np.abs(z[:, None] - z[None, :]).max())

    def boundary_points(self, n=None):
        return [c.copy() for c in self.curves]

    # --- representation rows
    def _rows(self, y):
        """E(y): evaluation rows of the representation at points y (flat)."""
        y = np.asarray(y, complex).reshape(-1)
        E = -(self.w[None, :] / (self.t[None, :] - y[:, None])).real / TWO_PI
        if self.n:
            L = np.log(np.abs(y[:, None] - self.hole_pts[None, :]))
            E = np.hstack([E, L])
        return E

    def _rhs_gt(self, x):
        x = np.asarray(x, complex).reshape(-1)
        b = np.zeros((self.nb + self.n, len(x)))
        b[:self.nb] = np.log(np.abs(x[None, :] - self.t[:, None])) / TWO_PI
        return b

    def gt_values(self, z, w):
        z, w = np.broadcast_arrays(np.asarray(z, complex), np.asarray(w, complex))
        shape = z.shape
        zf, wf = z.reshape(-1), w.reshape(-1)
        sol = sla.lu_solve(self.lu, self._rhs_gt(zf))
        E = self._rows(wf)
        return np.einsum("ij,ji->i", E, sol).reshape(shape)

    def reg0_matrix(self, targets, sources):
        t = np.asarray(targets, complex).reshape(-1)
        s = np.asarray(sources, complex).reshape(-1)
        sol = sla.lu_solve(self.lu, self._rhs_gt(t))
        G = (self._rows(s) @ sol).T
        if self.n:
            G = G + self.harmonic_values(t).T @ self.Ninv @ self.harmonic_values(s)
        return G

    def reg0_integrals(self, targets, sources, weights):
        # adjoint ordering: (w^T E) M^{-1} B costs O(nb (ns + nt)) instead of O(ns nt nb)
        t = np.asarray(targets, complex).reshape(-1)
        s = np.asarray(sources, complex).reshape(-1)
        wv = np.asarray(weights).reshape(-1)
        row = wv @ self._rows(s)
        adj = sla.lu_solve(self.lu, row, trans=1)
        out = adj @ self._rhs_gt(t)
        if self.n:
            out = out + self.harmonic_values(t).T @ (self.Ninv @ self.harmonic_integrals(s, wv))
        return out

    def harmonic_values(self, z):
        z = np.asarray(z, complex)
        E = self._rows(z.reshape(-1))
        return (E @ self.hsol).T.reshape((self.n,) + z.shape)

    def harmonic_integrals(self, sources, weights):
        if not self.n:
            return np.zeros(0)
        wv = np.asarray(weights).reshape(-1)
        return (wv @ self._rows(np.asarray(sources).reshape(-1))) @ self.hsol

    # --- jets
    def _row_jet(self, y):
        """E(y), grad E (2, m) and Hessian E (2, 2, m) at a scalar point y."""
        d = self.t - y
        F1 = self.w / d ** 2      # d/dy of w/(t - y)
        F2 = 2 * self.w / d ** 3
        c = -1.0 / TWO_PI
        E = c * (self.w / d).real
        gE = c * np.array([F1.real, -F1.imag])
        HE = c * np.array([[F2.real, -F2.imag], [-F2.imag, -F2.real]])
        if self.n:
            e = y - self.hole_pts
            E = np.concatenate([E, np.log(np.abs(e))])
            g1 = 1 / e
            g2 = -1 / e ** 2
            gE = np.hstack([gE, np.array([g1.real, -g1.imag])])
            HE = np.concatenate([HE, np.array([[g2.real, -g2.imag], [-g2.imag, -g2.real]])], axis=2)
        return E, gE, HE

    def gt_jet(self, z, w):
        d = z - self.t
        b = np.zeros((self.nb + self.n, 6))
        b[:self.nb, 0] = np.log(np.abs(d)) / TWO_PI
        f1 = 1 / d / TWO_PI
        f2 = -1 / d ** 2 / TWO_PI
        b[:self.nb, 1], b[:self.nb, 2] = f1.real, -f1.imag
        b[:self.nb, 3], b[:self.nb, 4], b[:self.nb, 5] = f2.real, -f2.imag, -f2.real
        s = sla.lu_solve(self.lu, b)
        E, gE, HE = self._row_jet(w)
        val = E @ s[:, 0]
        g1 = np.array([E @ s[:, 1], E @ s[:, 2]])
        h11v = E @ s[:, 3:6]
        h11 = np.array([[h11v[0], h11v[1]], [h11v[1], h11v[2]]])
        g2 = gE @ s[:, 0]
        h12 = np.array([[gE[b_] @ s[:, 1 + a_] for b_ in range(2)] for a_ in range(2)])
        h22 = HE @ s[:, 0]
        return PairJet(val, g1, g2, h11, h12, h22)

    def harmonic_jet(self, z):
        E, gE, HE = self._row_jet(z)
        return E @ self.hsol, (gE @ self.hsol).T, np.moveaxis(HE @ self.hsol, 2, 0)


def build_green_evaluator(spec: DomainSpec, quadrature_order: int | None = None) -> GreenEvaluator:
    spec.validate()
    if spec.kind == "disk":
        return DiskGreen(spec)
    if spec.kind == "annulus":
        return AnnulusGreen(spec)
    return BemGreen(spec, quadrature_order)
