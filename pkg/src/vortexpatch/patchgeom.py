"""Conformal parametrisation of near-circular patches and the Q(r, beta) operator.

A patch is Gamma(z) = x + r a1 (z + sum_{m>=3} c_m z^m) on the closed unit disk.
Shape data beta is stored as real boundary coefficients (A_m, B_m), m = 3..M, of
Re Gamma~(e^{i theta}) = sum A_m cos(m theta) + B_m sin(m theta), which means
c_m = A_m - i B_m.  a1 = (1 + sum m |c_m|^2)^{-1/2} fixes the area to pi r^2.

Periodic real functions on S^1 are stored as (K+1, 2) arrays of cosine/sine
coefficients; row 0 holds the mean (sine entry unused).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MeanNotZero, NonConformal, NonUniqueness, NotNearCircle

SOBOLEV_S = 2


# ---------------------------------------------------------------------------
# real Fourier helpers
# ---------------------------------------------------------------------------

def nodes(n):
    return 2 * np.pi * np.arange(n) / n


def samples_to_ab(v, K=None):
    """Equispaced samples -> (K+1, 2) cos/sin coefficients."""
    v = np.asarray(v, float)
    n = v.shape[-1]
    c = np.fft.rfft(v, axis=-1) / n
    K = n // 2 - 1 if K is None else K
    ab = np.zeros(v.shape[:-1] + (K + 1, 2))
    m = min(K + 1, c.shape[-1])
    ab[..., :m, 0] = 2 * c[..., :m].real
    ab[..., :m, 1] = -2 * c[..., :m].imag
    ab[..., 0, 0] = c[..., 0].real
    ab[..., 0, 1] = 0.0
    if n % 2 == 0 and K >= n // 2:
        ab[..., n // 2, :] *= 0.5
    return ab


def ab_to_samples(ab, n):
    ab = np.asarray(ab, float)
    K = ab.shape[-2] - 1
    if K >= n // 2 + (n % 2):
        raise ValueError("too few samples for the requested modes")
    c = np.zeros(ab.shape[:-2] + (n // 2 + 1,), complex)
    c[..., :K + 1] = 0.5 * (ab[..., 0] - 1j * ab[..., 1])
    c[..., 0] = ab[..., 0, 0]
    return np.fft.irfft(c * n, n, axis=-1)


def ab_derivative(ab):
    """d/dtheta: (a, b) -> (k b, -k a)."""
    ab = np.asarray(ab, float)
    k = np.arange(ab.shape[-2])
    out = np.empty_like(ab)
    out[..., 0] = k * ab[..., 1]
    out[..., 1] = -k * ab[..., 0]
    return out


def spectral_derivative(v):
    """d/dtheta of equispaced periodic samples (Nyquist mode dropped)."""
    v = np.asarray(v)
    n = v.shape[-1]
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0
    out = np.fft.ifft(1j * k * np.fft.fft(v, axis=-1), axis=-1)
    return out if np.iscomplexobj(v) else out.real


def dtn(v):
    """Interior Dirichlet-to-Neumann map on the unit disk acting on samples."""
    v = np.asarray(v, float)
    n = v.shape[-1]
    k = np.abs(np.fft.fftfreq(n, 1.0 / n))
    if n % 2 == 0:
        k[n // 2] = 0
    return np.fft.ifft(k * np.fft.fft(v, axis=-1), axis=-1).real


@dataclass
class BoundaryFunction:
    """Real periodic function, cos/sin coefficients up to order K."""
    ab: np.ndarray

    @property
    def K(self):
        return self.ab.shape[0] - 1

    @property
    def mean(self):
        return float(self.ab[0, 0])

    @classmethod
    def from_samples(cls, v, K=None):
        return cls(samples_to_ab(v, K))

    @classmethod
    def from_modes(cls, modes, K=None):
        """modes: dict {k: (a_k, b_k)}."""
        K = max(modes) if K is None else K
        ab = np.zeros((K + 1, 2))
        for k, (a, b) in modes.items():
            ab[k] = (a, b)
        return cls(ab)

    def samples(self, n):
        return ab_to_samples(self.ab, n)

    def __call__(self, theta):
        k = np.arange(self.K + 1)
        th = np.asarray(theta, float)[..., None]
        return (self.ab[:, 0] * np.cos(k * th) + self.ab[:, 1] * np.sin(k * th)).sum(-1)

    def norm(self):
        return float(np.sqrt(np.sum(self.ab ** 2)))


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------

def beta_to_taylor(beta):
    beta = np.asarray(beta, float).reshape(-1, 2)
    return beta[:, 0] - 1j * beta[:, 1]


def taylor_to_beta(c):
    c = np.asarray(c)
    return np.column_stack([c.real, -c.imag])


def sobolev_norm(beta, s=SOBOLEV_S):
    c = beta_to_taylor(beta)
    m = np.arange(3, 3 + len(c))
    return float(np.sqrt(np.sum(m ** (2 * s) * np.abs(c) ** 2)))


def conformal_radius_bound(M, s=SOBOLEV_S):
    """R_s = (sum_{m=3}^M m^{2-2s})^{-1/2}."""
    m = np.arange(3, M + 1, dtype=float)
    return float(np.sum(m ** (2 - 2 * s)) ** -0.5)


@dataclass(frozen=True)
class PatchShape:
    r: float
    x: complex = 0j
    beta: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        b = np.asarray(self.beta, float).reshape(-1, 2)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "x", complex(self.x) if np.ndim(self.x) == 0
                           else complex(self.x[0], self.x[1]))

    @classmethod
    def circle(cls, r, x=0j, M=32):
        return cls(r, x, np.zeros((M - 2, 2)))

    @property
    def M(self):
        return self.beta.shape[0] + 2

    @property
    def taylor(self):
        return beta_to_taylor(self.beta)

    @property
    def a1(self):
        c = self.taylor
        m = np.arange(3, 3 + len(c))
        return float((1.0 + np.sum(m * np.abs(c) ** 2)) ** -0.5)

    def is_admissible(self):
        return sobolev_norm(self.beta) < conformal_radius_bound(max(self.M, 3))

    def check(self):
        if not self.is_admissible():
            raise NonConformal("shape norm exceeds the conformality bound R_s")
        return self

    def replace(self, **kw):
        return replace(self, **kw)

    # holomorphic data ------------------------------------------------------
    def poly(self):
        """Taylor coefficients of Gamma, degree 0..M."""
        p = np.zeros(self.M + 1, complex)
        s = self.r * self.a1
        p[0] = self.x
        p[1] = s
        p[3:] = s * self.taylor
        return p

    def gamma(self, z):
        return np.polynomial.polynomial.polyval(z, self.poly())

    def dgamma(self, z):
        p = self.poly()
        return np.polynomial.polynomial.polyval(z, p[1:] * np.arange(1, len(p)))

    def d2gamma(self, z):
        p = self.poly()
        k = np.arange(2, len(p))
        return np.polynomial.polynomial.polyval(z, p[2:] * k * (k - 1))

    def to_dict(self):
        return {"r": self.r, "x": [self.x.real, self.x.imag], "beta": self.beta.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["r"]), complex(*d["x"]), np.asarray(d["beta"], float))


def boundary_eval(shape: PatchShape, theta):
    """(Gamma(e^{i theta}), d/dtheta Gamma(e^{i theta})) as complex arrays."""
    shape.check()
    z = np.exp(1j * np.asarray(theta, float))
    return shape.gamma(z), 1j * z * shape.dgamma(z)


def enclosed_area(shape: PatchShape, n=None):
    n = n or 4 * shape.M + 8
    g, dg = boundary_eval(shape, nodes(n))
    return float(0.5 * np.mean((np.conj(g) * dg).imag) * 2 * np.pi)


def boundary_samples_csv(shape: PatchShape, n=256):
    th = nodes(n)
    g, _ = boundary_eval(shape, th)
    return np.column_stack([th, g.real, g.imag])


# ---------------------------------------------------------------------------
# normalisation (Moebius recentering so that Gamma''(0) = 0, Gamma'(0) > 0)
# ---------------------------------------------------------------------------

@dataclass
class NormalizeResult:
    shape: PatchShape
    c: complex
    alpha: complex
    residual: float
    iterations: int


def normalize_conformal(raw, M=None, tol=1e-14, max_iter=50) -> NormalizeResult:
    """raw: complex Taylor coefficients p_0..p_M of a map close to a circle."""
    p = np.asarray(raw, complex)
    M = M or max(len(p) - 1, 3)
    if len(p) < 2 or abs(p[1]) == 0:
        raise NotNearCircle("missing mode-1 coefficient")
    others = np.abs(np.delete(p, [0, 1])) if len(p) > 2 else np.zeros(1)
    if others.size and others.max() * 10 > abs(p[1]):
        raise NotNearCircle("mode 1 does not dominate by a factor of 10")
    P = np.polynomial.polynomial
    d1 = P.polyder(p)
    d2 = P.polyder(p, 2) if len(p) > 2 else np.zeros(1, complex)
    d3 = P.polyder(p, 3) if len(p) > 3 else np.zeros(1, complex)

    def res(b):
        return P.polyval(b, d2) * (1 - abs(b) ** 2) - 2 * np.conj(b) * P.polyval(b, d1)

    b = 0j
    it = 0
    r = res(b)
    while abs(r) > tol * abs(p[1]):
        if it >= max_iter:
            raise NotNearCircle("Moebius normalisation did not converge")
        # real 2x2 Jacobian of the non-holomorphic residual
        f2, f3, f1 = P.polyval(b, d2), P.polyval(b, d3), P.polyval(b, d1)
        Rb = f3 * (1 - abs(b) ** 2) - np.conj(b) * f2 - 2 * np.conj(b) * f2     # d/db
        Rbb = -b * f2 - 2 * f1                                                  # d/dbbar
        Jm = np.array([[(Rb + Rbb).real, (1j * (Rb - Rbb)).real],
                       [(Rb + Rbb).imag, (1j * (Rb - Rbb)).imag]])
        du = np.linalg.solve(Jm, [-r.real, -r.imag])
        b = b + du[0] + 1j * du[1]
        if abs(b) >= 0.5:
            raise NotNearCircle("Moebius centre left the admissible region")
        r = res(b)
        it += 1
    f1 = P.polyval(b, d1)
    alpha = abs(f1) / f1 if b != 0 or np.angle(f1) != 0 else 1.0 + 0j
    alpha = complex(alpha)
    c = b / alpha
    # recompose and read off Taylor coefficients
    n = max(8 * (len(p) + M), 256)
    z = np.exp(1j * nodes(n))
    mz = alpha * (z + c) / (1 + np.conj(c) * z)
    q = np.fft.fft(P.polyval(mz, p)) / n
    q = q[:M + 1]
    s = q[1].real
    cm = q[3:M + 1] / s
    beta = taylor_to_beta(cm)
    a1 = (1 + np.sum(np.arange(3, M + 1) * np.abs(cm) ** 2)) ** -0.5
    shape = PatchShape(s / a1, q[0], beta)
    return NormalizeResult(shape, complex(c), alpha, float(abs(q[2]) / s), it)


# ---------------------------------------------------------------------------
# Q(r, beta): weighted normal velocity  <->  (centre velocity, shape velocity)
# ---------------------------------------------------------------------------

def a1_dot(shape: PatchShape, alpha):
    """Rate of change of a1 under the shape variation alpha."""
    c = shape.taylor
    cd = beta_to_taylor(alpha)
    m = np.arange(3, 3 + len(c))
    S = np.sum(m * np.abs(c) ** 2)
    return float(-(1 + S) ** -1.5 * np.sum(m * (np.conj(c) * cd).real))


def q_invert(shape: PatchShape, y, alpha, K=None) -> BoundaryFunction:
    """f = Gammadot . (z dGamma) on S^1 for the variation (y, alpha).

    The shape's own centre is irrelevant; r and beta enter."""
    shape.check()
    alpha = np.asarray(alpha, float).reshape(-1, 2)
    if alpha.shape[0] != shape.beta.shape[0]:
        raise ValueError("alpha must carry the same modes as beta")
    y = complex(y[0], y[1]) if np.ndim(y) else complex(y)
    r, a1 = shape.r, shape.a1
    ad = a1_dot(shape, alpha)
    M = shape.M
    gdot = np.zeros(M + 1, complex)
    gdot[0] = y
    gdot[1] = r * ad
    gdot[3:] = r * a1 * beta_to_taylor(alpha) + r * ad * shape.taylor
    n = 4 * (M + 2)
    z = np.exp(1j * nodes(n))
    P = np.polynomial.polynomial
    f = (np.conj(P.polyval(z, gdot)) * z * shape.dgamma(z)).real
    return BoundaryFunction.from_samples(f, K if K is not None else M)


def q_apply(shape: PatchShape, f, mean_tol=1e-10, n=None, return_gdot=False):
    """Inverse of q_invert: (y, alpha) from a mean-zero boundary function.

    f may be a BoundaryFunction or equispaced samples.  Follows the Laurent
    construction: Re(Gammadot / (z Gamma')) = f / |Gamma'|^2 on S^1.
    """
    shape.check()
    M = shape.M
    if isinstance(f, BoundaryFunction):
        scale = max(f.norm(), 1e-300)
        if abs(f.mean) > mean_tol * scale:
            raise MeanNotZero(f"mean {f.mean:.3e} of the normal velocity is not zero")
        n = n or max(16 * (M + 2), 4 * (f.K + 2))
        fs = f.samples(n)
    else:
        fs = np.asarray(f, float)
        n = fs.shape[-1]
        scale = max(np.abs(fs).max(), 1e-300)
        if abs(fs.mean()) > mean_tol * scale:
            raise MeanNotZero(f"mean {fs.mean():.3e} of the normal velocity is not zero")
    z = np.exp(1j * nodes(n))
    dG = shape.dgamma(z)
    g = fs / np.abs(dG) ** 2
    gh = np.fft.fft(g) / n                 # gh[k] = k-th Fourier coefficient
    A0 = gh[0].real
    T1 = 2 * gh[1]                          # A1 - i B1
    w = 2 * gh[:M + 1]                      # w_l = A_l - i B_l for l >= 2
    p0 = shape.r * shape.a1
    p2 = p0 * 3 * shape.taylor[0] if M >= 3 else 0j
    if abs(abs(p2) - p0) < 1e-12 * p0:
        raise NonUniqueness("|Gamma'''(0)| = 2 |Gamma'(0)|: residue system is singular")
    Pm, Qm = p2.real, p2.imag
    Jm = np.array([[p0 - Pm, Qm], [-Qm, -p0 - Pm]])
    rhs = p0 * T1
    uv = np.linalg.solve(Jm, [rhs.real, rhs.imag])
    q = uv[0] + 1j * uv[1]
    # Laurent coefficients W_{-1}, W_0, ..., W_{M-1}
    W = np.zeros(M + 1, complex)
    W[0] = q
    W[1] = A0
    W[2] = T1 - np.conj(q)
    W[3:] = w[2:M]
    h = np.zeros(M + 1, complex)            # z Gamma'(z): h[l] multiplies z^l
    pz = shape.poly()
    h[1:] = pz[1:] * np.arange(1, M + 1)
    gdot = np.zeros(M + 1, complex)
    for k in range(M + 1):
        l = np.arange(1, k + 2)
        l = l[l <= M]
        gdot[k] = np.sum(h[l] * W[k - l + 1])
    y = gdot[0]
    rad = gdot[1].real
    cd = (gdot[3:] - rad * shape.taylor) / p0
    alpha = taylor_to_beta(cd)
    out = (np.array([y.real, y.imag]), alpha)
    if return_gdot:
        return out + (gdot,)
    return out


def q0_matrix(M):
    """Q(1, 0) restricted to modes 2..M-1 -> shape modes 3..M (identity in pairs)."""
    return np.eye(2 * (M - 2))
