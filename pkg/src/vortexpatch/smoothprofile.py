"""Lipschitz steady vorticities built from a semilinear profile.

Each patch carries vorticity mu_j f(psi~_j o Gamma_j^{-1}) / ((a1 r)^2 I_j), where
psi~_j solves  Lap psi~ = |1 + Gamma~'|^2 f(psi~)  on the unit disk with zero
boundary values and I_j normalises the circulation to mu_j.  The nonlinearity
is fixed to f(t) = -lam t - kappa t^3.

Discretisation of the disk: Chebyshev collocation along diameters (parity
pairing through the origin) times Fourier in theta.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq
from scipy.special import jn_zeros

from .errors import (DegenerateCritical, DegenerateLinearization, NewtonDiverged,
                     NoSolutionInWindow, ProfileIncompatible)
from .induction import PatchSystem, kress_weights
from .patchgeom import (BoundaryFunction, PatchShape, nodes, samples_to_ab,
                        spectral_derivative)
from .pointvortex import VortexConfig, find_critical

TWO_PI = 2 * np.pi
J01_SQ = float(jn_zeros(0, 1)[0] ** 2)      # first Dirichlet eigenvalue of -Lap on B_1


def cheb(N):
    """Chebyshev points cos(pi j / N) and differentiation matrix."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(1))
    return x, D


def cheb_interp_matrix(N, t):
    """Barycentric interpolation from the N+1 Chebyshev points to targets t."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    t = np.asarray(t, float)
    d = t[:, None] - x[None, :]
    exact = np.isclose(d, 0.0, atol=1e-15)
    d[exact] = 1.0
    B = w / d
    B /= B.sum(1, keepdims=True)
    rows = exact.any(1)
    B[rows] = exact[rows].astype(float)
    return B


# ---------------------------------------------------------------------------
# radial ground state
# ---------------------------------------------------------------------------

def _radial_blocks(N):
    """Even/odd radial operator pieces on the N2 = (N-1)/2 positive interior nodes."""
    if N % 2 == 0:
        raise ValueError("Chebyshev order must be odd so that rho = 0 is not a node")
    x, D = cheb(N)
    N2 = (N - 1) // 2
    D2 = D @ D
    p = np.arange(1, N2 + 1)
    q = np.arange(N - 1, N2, -1)          # partner -x_i of x_i
    R = np.diag(1.0 / x[p])
    A1 = D2[np.ix_(p, p)] + R @ D[np.ix_(p, p)]
    A2 = D2[np.ix_(p, q)] + R @ D[np.ix_(p, q)]
    return x[p], A1, A2, R


@dataclass(frozen=True)
class ProfileSpec:
    """Radial ground state psi* < 0 of Lap psi = f(psi) on B_1, psi(1) = 0."""
    lam: float
    kappa: float
    n_cheb: int
    rho: np.ndarray = field(repr=False)      # positive interior Chebyshev nodes
    psi: np.ndarray = field(repr=False)      # psi* at rho
    psi0: float = 0.0
    residual: float = np.inf                 # |psi(1)| of the shooting solution
    grid_error: float = np.inf               # collocation vs shooting at the nodes
    margin: float = 0.0
    margins: np.ndarray = field(default=None, repr=False)

    def f(self, t):
        return -self.lam * t - self.kappa * t ** 3

    def fprime(self, t):
        return -self.lam - 3 * self.kappa * t ** 2

    def __call__(self, rho):
        """psi* at arbitrary radii in [0, 1] (spectral interpolation)."""
        rho = np.asarray(rho, float)
        B = cheb_interp_matrix(self.n_cheb, rho.reshape(-1))
        return (B @ self.diameter()).reshape(rho.shape)

    def diameter(self):
        v = np.zeros(self.n_cheb + 1)
        N2 = len(self.psi)
        v[1:N2 + 1] = self.psi
        v[N2 + 1:self.n_cheb] = self.psi[::-1]
        return v

    def to_dict(self):
        return {"lambda": self.lam, "kappa": self.kappa, "n_cheb": self.n_cheb,
                "psi0": self.psi0, "residual": self.residual, "grid_error": self.grid_error,
                "nondegeneracy_margin": self.margin,
                "rho": self.rho.tolist(), "psi": self.psi.tolist()}


def _shoot(lam, kappa, a, rmax=1.0, stop_at_zero=False, dense=False):
    f = lambda t: -lam * t - kappa * t ** 3
    r0 = 1e-6
    y0 = [a + f(a) * r0 ** 2 / 4, f(a) * r0 / 2]

    def ode(r, y):
        return [y[1], f(y[0]) - y[1] / r]

    def hit(r, y):
        return y[0]
    hit.terminal = stop_at_zero
    hit.direction = 1
    return solve_ivp(ode, (r0, rmax), y0, method="DOP853", rtol=1e-13, atol=1e-15,
                     events=hit, dense_output=dense)


def _first_zero(lam, kappa, a, rmax=8.0):
    sol = _shoot(lam, kappa, a, rmax, stop_at_zero=True)
    if sol.status == 1 and len(sol.t_events[0]):
        return float(sol.t_events[0][0])
    return np.inf


def shoot_amplitude(lam, kappa, a_max=1e3):
    """psi(0) < 0 with first zero exactly at rho = 1 (bracketing then Brent)."""
    g = lambda a: _first_zero(lam, kappa, a) - 1.0
    lo = -1e-3
    if not np.isfinite(g(lo)) or g(lo) <= 0:
        raise NoSolutionInWindow(
            f"small-amplitude solutions vanish before rho = 1 (lambda = {lam} >= {J01_SQ:.4f}?)")
    hi = lo
    while g(hi) > 0:
        hi *= 2.0
        if abs(hi) > a_max:
            raise NoSolutionInWindow("no amplitude brings the first zero to rho = 1")
    return brentq(g, hi, hi / 2, xtol=1e-15, rtol=1e-15, maxiter=200)


def nondegeneracy_margins(profile_or_psi, lam, kappa, N, m_max=32):
    """min |eig| of Lap - f'(psi*) restricted to each Fourier mode m <= m_max."""
    x, A1, A2, R = _radial_blocks(N)
    psi = profile_or_psi
    fp = -lam - 3 * kappa * psi ** 2
    out = np.zeros(m_max + 1)
    for m in range(m_max + 1):
        A = A1 + (A2 if m % 2 == 0 else -A2) - m ** 2 * R @ R - np.diag(fp)
        out[m] = np.abs(np.linalg.eigvals(A)).min()
    return out


def radial_ground_state(lam=1.0, kappa=1.0, n_cheb=49, guess_amplitude=None,
                        tol=1e-10, degeneracy_tol=1e-6, m_max=32) -> ProfileSpec:
    """Negative radial solution of psi'' + psi'/rho = f(psi), psi'(0) = 0, psi(1) = 0."""
    if lam <= 0:
        raise ProfileIncompatible("f'(0) = -lambda must be negative")
    if kappa < 0:
        raise ProfileIncompatible("kappa must be non-negative")
    if kappa == 0:
        # linear f: nontrivial solutions need lambda = j01^2 and then span a kernel
        raise DegenerateLinearization(
            f"linear f admits a negative solution only at lambda = {J01_SQ:.6f}, "
            "where Lap - f'(psi*) has a kernel")
    a = guess_amplitude if guess_amplitude is not None else shoot_amplitude(lam, kappa)
    shot = _shoot(lam, kappa, a, dense=True)
    residual = abs(float(shot.y[0, -1]))
    x, A1, A2, _ = _radial_blocks(n_cheb)
    A = A1 + A2
    # polish on the collocation grid, seeded by the shooting trajectory
    ref = shot.sol(np.maximum(x, shot.t[0]))[0]
    u = ref.copy()
    for _ in range(30):
        F = A @ u + lam * u + kappa * u ** 3
        du = np.linalg.solve(A + np.diag(lam + 3 * kappa * u ** 2), F)
        u = u - du
        if np.abs(du).max() < 1e-13 * max(1.0, np.abs(u).max()):
            break
    else:
        raise NewtonDiverged("radial collocation Newton did not converge")
    if np.any(u >= 0):
        raise NoSolutionInWindow("collocation converged to a sign-changing solution")
    margins = nondegeneracy_margins(u, lam, kappa, n_cheb, m_max)
    psi0 = float(cheb_interp_matrix(n_cheb, [0.0])[0] @ np.r_[0.0, u, u[::-1], 0.0])
    prof = ProfileSpec(float(lam), float(kappa), n_cheb, x, u, psi0, residual,
                       float(np.abs(u - ref).max()), float(margins.min()), margins)
    if residual > tol:
        raise NewtonDiverged(f"shooting residual {residual:.2e} above {tol:.0e}")
    if prof.margin < degeneracy_tol:
        raise DegenerateLinearization(f"Lap - f'(psi*) nearly singular (margin {prof.margin:.2e})")
    return prof


# ---------------------------------------------------------------------------
# semilinear problem on the unit disk
# ---------------------------------------------------------------------------

class PolarGrid:
    """Interior polar collocation grid: positive Chebyshev radii x Fourier angles."""

    def __init__(self, n_cheb, n_theta):
        if n_theta % 2:
            raise ValueError("n_theta must be even")
        self.N, self.n = n_cheb, n_theta
        self.rho, A1, A2, R = _radial_blocks(n_cheb)
        self.N2 = len(self.rho)
        self.theta = nodes(n_theta)
        self.z = self.rho[:, None] * np.exp(1j * self.theta)[None, :]
        k = np.fft.fftfreq(n_theta, 1.0 / n_theta)
        D2t = np.real(np.fft.ifft(-(k ** 2)[:, None] * np.fft.fft(np.eye(n_theta), axis=0), axis=0))
        I = np.eye(n_theta)
        P = np.roll(I, n_theta // 2, axis=1)     # (P u)_k = u_{k + n/2}
        self.L = np.kron(A1, I) + np.kron(A2, P) + np.kron(R @ R, D2t)
        self._A1, self._A2, self._r2 = A1, A2, 1.0 / self.rho ** 2
        _, self.D = cheb(n_cheb)

    def laplacian(self, u):
        """L @ u with the angular part done by FFT (lower roundoff than the dense D2t)."""
        U = u.reshape(self.N2, self.n)
        k = np.arange(self.n // 2 + 1)
        ang = np.fft.irfft(-(k ** 2) * np.fft.rfft(U, axis=1), self.n, axis=1)
        V = self._A1 @ U + self._A2 @ np.roll(U, -self.n // 2, axis=1) + self._r2[:, None] * ang
        return V.reshape(-1)

    def diameters(self, U):
        """(N+1, n) values along each diameter theta_k (rho from +1 to -1)."""
        U = U.reshape(self.N2, self.n)
        V = np.zeros((self.N + 1, self.n))
        V[1:self.N2 + 1] = U
        V[self.N2 + 1:self.N] = np.roll(U, -self.n // 2, axis=1)[::-1]
        return V

    def radial_derivative_at_boundary(self, U):
        return self.D[0] @ self.diameters(U)

    def interpolate_radii(self, U, rho):
        return cheb_interp_matrix(self.N, rho) @ self.diameters(U)


def conformal_weight(shape: PatchShape, z):
    """|1 + Gamma~'(z)|^2 for the normalised map z + sum c_m z^m."""
    return np.abs(shape.dgamma(z) / (shape.r * shape.a1)) ** 2


class DiskSolver:
    """Newton for Lap u = W f(u) on B_1 with u = 0 on the circle.

    Keeps the last factorisation: nearby shapes (finite-difference columns,
    continuation steps) are handled by modified Newton without refactoring.
    """

    def __init__(self, profile: ProfileSpec, n_theta, tol=1e-13, max_iter=30):
        self.profile = profile
        self.grid = PolarGrid(profile.n_cheb, n_theta)
        self.tol, self.max_iter = tol, max_iter
        self.seed = np.repeat(profile.psi, n_theta)
        self._lu = None
        self._memo = {}

    def _newton(self, W, u, lu):
        """Modified Newton; stops on the update size (the residual has an
        O(N^4 eps) roundoff floor from the collocation Laplacian)."""
        p = self.profile
        L = self.grid.L
        prev = np.inf
        scale = max(1.0, np.abs(u).max())
        for _ in range(self.max_iter):
            G = self.grid.laplacian(u) - W * p.f(u)
            if lu is None:
                lu = lu_factor(L - np.diag(W * p.fprime(u)))
            du = lu_solve(lu, G)
            u = u - du
            step = np.abs(du).max()
            if step <= self.tol * scale:
                return u, lu, float(np.abs(self.grid.laplacian(u) - W * p.f(u)).max())
            if step > 0.25 * prev:
                lu = None                       # slow contraction: refactor
            prev = step
        raise NewtonDiverged(f"disk semilinear solve stalled (last update {step:.2e})")

    def solve(self, shape: PatchShape):
        key = shape.beta.tobytes()
        if key in self._memo:
            return self._memo[key]
        W = conformal_weight(shape, self.grid.z).reshape(-1)
        u0 = self._last if self._lu is not None else self.seed
        u, self._lu, err = self._newton(W, u0.copy(), self._lu)
        if len(self._memo) > 64:
            self._memo.clear()
        self._last = u
        self._memo[key] = (u, err)
        return u, err


def solve_profile_on_disk(profile: ProfileSpec, beta, n_theta=None, tol=1e-13):
    """psi~ on the polar grid for physical shape coefficients beta (r = 1 shape)."""
    shape = PatchShape(1.0, 0j, np.asarray(beta, float).reshape(-1, 2)).check()
    n = n_theta or max(4 * shape.M, 64)
    solver = DiskSolver(profile, n + n % 2, tol)
    u, err = solver.solve(shape)
    return u.reshape(solver.grid.N2, solver.grid.n), solver.grid, err


# ---------------------------------------------------------------------------
# smooth vorticity on deformed disks and its stream function
# ---------------------------------------------------------------------------

@dataclass
class PatchDensity:
    """Per-patch smooth vorticity data on the PatchSystem sampling."""
    shape: PatchShape
    psi_grid: np.ndarray        # psi~ on the polar grid (N2, n)
    I: float                    # int_B1 |1 + Gamma~'|^2 f(psi~)
    sigma: np.ndarray           # (mu / I) d_rho psi~ at rho = 1 (boundary flux density)
    area_weights: np.ndarray    # omega(y) dA on the PatchSystem area nodes
    solve_residual: float


def _density(profile, solver: DiskSolver, shape: PatchShape, samples, mu, n_rad):
    u, err = solver.solve(shape)
    grid = solver.grid
    xg, _ = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * (xg + 1)
    vals = grid.interpolate_radii(u, rho)                  # (n_rad, n)
    scale = (shape.a1 * shape.r) ** 2
    fw = profile.f(vals).reshape(-1) * samples.area_w / scale
    I = float(fw.sum())
    if not I > 0:
        raise ProfileIncompatible("normalising integral is not positive")
    sigma = mu / I * grid.radial_derivative_at_boundary(u)
    return PatchDensity(shape, u.reshape(grid.N2, grid.n), I, sigma, mu / I * fw, err)


def _self_log_layer(g, dg, sigma):
    """(1/2pi) int log|g_i - g(t)| sigma(t) dt at the nodes (Kress split)."""
    n = len(g)
    th = nodes(n)
    diff = g[None, :] - g[:, None]
    s = th[:, None] - th[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.log(np.abs(diff) / np.abs(2 * np.sin(s / 2)))
    np.fill_diagonal(lam, np.log(np.abs(dg)))
    return (0.5 * kress_weights(n) @ sigma + lam @ sigma * (TWO_PI / n)) / TWO_PI


def _log_layer(g, sigma, x):
    x = np.asarray(x, complex)
    L = np.log(np.abs(x.reshape(-1, 1) - g[None, :]))
    return (L @ sigma / len(g)).reshape(x.shape)


class SmoothSystem:
    """Concentrated smooth vortices: Psi = sum_k (Newtonian_k - regular_k) + c.H.

    The Newtonian potential of omega_k is reduced to a single layer: psi_k
    vanishes on the boundary, so Green's identity gives
        N_k(x) = psi_k(x) chi_k(x) + (1/2pi) oint log|x - y| d_n psi_k ds_y,
    and d_n psi_k ds pulls back to (mu_k / I_k) d_rho psi~_k d theta.
    """

    def __init__(self, ev, mu, shapes, profile: ProfileSpec, n_theta=None, n_rad=16,
                 solvers=None, check=True):
        self.base = PatchSystem(ev, mu, shapes, n_theta, n_rad, check)
        self.ev, self.mu, self.shapes = ev, self.base.mu, self.base.shapes
        self.profile = profile
        self.n, self.n_rad = self.base.n, self.base.n_rad
        self.solvers = solvers or [DiskSolver(profile, self.n) for _ in shapes]
        if any(s.grid.n != self.n for s in self.solvers):
            raise ValueError("disk solvers must use the boundary node count")
        self.dens = [_density(profile, sv, s, sm, m, self.n_rad)
                     for sv, s, sm, m in zip(self.solvers, self.shapes, self.base.samples, self.mu)]

    @property
    def N(self):
        return len(self.shapes)

    def _smooth_part(self, x):
        x = np.asarray(x, complex).reshape(-1)
        src = np.concatenate([s.area_pts for s in self.base.samples])
        wts = -np.concatenate([d.area_weights for d in self.dens])
        v = self.ev.reg0_integrals(x, src, wts)
        if self.ev.n:
            v = v + self.ev.c @ self.ev.harmonic_values(x)
        return v

    def boundary_stream(self):
        sm = self.base.samples
        allg = np.concatenate([s.g for s in sm])
        smooth = self._smooth_part(allg).reshape(self.N, self.n)
        out = []
        for j in range(self.N):
            v = smooth[j] + _self_log_layer(sm[j].g, sm[j].dg, self.dens[j].sigma)
            for k in range(self.N):
                if k != j:
                    v = v + _log_layer(sm[k].g, self.dens[k].sigma, sm[j].g)
            out.append(v)
        return out

    def phi_samples(self):
        return [spectral_derivative(p) for p in self.boundary_stream()]

    def stream_minus_local(self, j, rho=(0.2, 0.4, 0.6, 0.8), n_fine=None):
        """Psi - psi_j at interior points Gamma_j(rho e^{i theta}) of patch j."""
        s = self.shapes[j]
        th = nodes(self.n)
        z = (np.asarray(rho)[:, None] * np.exp(1j * th)[None, :]).reshape(-1)
        x = s.gamma(z)
        n_fine = n_fine or 16 * self.n
        zf = np.exp(1j * nodes(n_fine))
        v = self._smooth_part(x)
        for k, (sk, d) in enumerate(zip(self.shapes, self.dens)):
            sig = _fourier_resample(d.sigma, n_fine)
            v = v + _log_layer(sk.gamma(zf), sig, x)
        return v

    def vorticity_budget(self):
        """(int omega_j - mu_j, boundary |omega| / max interior |omega|) per patch."""
        out = []
        for d, m, sv in zip(self.dens, self.mu, self.solvers):
            total = float(d.area_weights.sum())
            scale = m / ((d.shape.a1 * d.shape.r) ** 2 * d.I)
            inner = np.abs(scale * self.profile.f(d.psi_grid)).max()
            edge = np.abs(scale * self.profile.f(sv.grid.diameters(d.psi_grid)[0])).max()
            out.append((total - m, edge / inner))
        return out


def _fourier_resample(v, n):
    c = np.fft.rfft(v)
    out = np.zeros(n // 2 + 1, complex)
    m = min(len(c), len(out))
    out[:m] = c[:m]
    if n > len(v) and len(v) % 2 == 0:
        out[len(c) - 1] *= 0.5        # split the Nyquist term between +-n/2
    return np.fft.irfft(out, n) * (n / len(v))


# ---------------------------------------------------------------------------
# h for the profile and its linearisation
# ---------------------------------------------------------------------------

def self_stream_h_smooth(profile: ProfileSpec, beta, n=None, solver=None) -> BoundaryFunction:
    """d/dtheta of the unit-circulation self potential on the r = 1 boundary."""
    shape = PatchShape(1.0, 0j, np.asarray(beta, float).reshape(-1, 2)).check()
    n = n or max(4 * shape.M, 64)
    n += n % 2
    solver = solver or DiskSolver(profile, n)
    th = nodes(n)
    z = np.exp(1j * th)
    g, dg = shape.gamma(z), 1j * z * shape.dgamma(z)
    base = PatchSystem.__new__(PatchSystem)       # only the sampling is needed
    base.n, base.n_rad = n, 16
    sm = base._sample(shape)
    d = _density(profile, solver, shape, sm, 1.0, 16)
    return BoundaryFunction.from_samples(spectral_derivative(_self_log_layer(g, dg, d.sigma)),
                                         shape.M)


def dh_profile_eigs(profile: ProfileSpec, M=16, eps=1e-6, n=None):
    """lambda_m (m = 2..M-1) of Dh(0): input mode m+1 -> m lambda_m on mode m.

    Assembled by central differences mode by mode; `offband` is the largest
    output outside the expected single band."""
    n = n or max(4 * M, 64)
    solver = DiskSolver(profile, n + n % 2)
    lam = np.zeros((M - 2, 2))
    offband = 0.0
    for i in range(M - 2):
        m = i + 2                                   # output mode; input mode m + 1
        for part in (0, 1):
            b = np.zeros((M - 2, 2))
            b[i, part] = eps
            hp = self_stream_h_smooth(profile, b, n, solver).ab
            hm = self_stream_h_smooth(profile, -b, n, solver).ab
            d = (hp - hm) / (2 * eps)
            # A_{m+1} -> -m lam sin(m th);  B_{m+1} -> m lam cos(m th)
            lam[i, part] = (-d[m, 1] if part == 0 else d[m, 0]) / m
            mask = np.ones_like(d, bool)
            mask[m, 1 - part] = False
            offband = max(offband, float(np.abs(d[mask]).max()))
    patch = np.array([(m - 1) / (TWO_PI * m) for m in range(2, M)])
    return {"m": list(range(2, M)), "lambda": lam.mean(1), "lambda_parts": lam,
            "offband": offband, "min_abs": float(np.abs(lam).min()), "patch_values": patch}


# ---------------------------------------------------------------------------
# steady smooth states
# ---------------------------------------------------------------------------

@dataclass
class SmoothSteady:
    state: "SteadyState"
    profile: ProfileSpec
    system: SmoothSystem = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        d = self.state.to_dict()
        d["profile"] = self.profile.to_dict()
        d["psi_tilde"] = [{"rho": self.system.solvers[j].grid.rho.tolist(),
                           "theta_count": self.system.n,
                           "values": dens.psi_grid.tolist(), "I": dens.I}
                          for j, dens in enumerate(self.system.dens)]
        d["smooth_diagnostics"] = _clean(self.diagnostics)
        return d


def _clean(d):
    if isinstance(d, dict):
        return {k: _clean(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_clean(v) for v in d]
    if isinstance(d, np.ndarray):
        return d.tolist()
    if isinstance(d, np.generic):
        return d.item()
    return d


def residual_smooth(ev, mu, X, beta, r, profile, solvers, n_theta=None, n_rad=16, check=False):
    """Same scaling as the patch residual: r_j^{-1} phi_j on modes 1..M-1."""
    from .steady import ResidualSplit
    r = np.asarray(r, float)
    M = beta.shape[1] + 2
    shapes = [PatchShape(r[j], complex(X[2 * j], X[2 * j + 1]), r[j] * beta[j]) for j in range(len(r))]
    sys = SmoothSystem(ev, mu, shapes, profile, n_theta, n_rad, solvers, check)
    y = np.zeros(2 * len(r))
    sh = np.zeros((len(r), M - 2, 2))
    for j, ph in enumerate(sys.phi_samples()):
        ab = samples_to_ab(ph / r[j], M - 1)
        y[2 * j:2 * j + 2] = ab[1]
        sh[j] = ab[2:M]
    return ResidualSplit(y, sh, r), sys


def solve_steady_smooth(ev, mu, r, X0, profile: ProfileSpec, tol=1e-9, M=16, n_theta=None,
                        n_rad=16, schedule=None, max_iter=8, threads=1, verbose=False) -> SmoothSteady:
    """Newton with continuation in r, reusing the patch solver's residual scaling."""
    from .steady import SteadyState, continuation_schedule, newton, separation, _pack, _unpack
    mu = np.asarray(mu, float)
    r = np.atleast_1d(np.asarray(r, float))
    N = len(mu)
    if r.size == 1 and N > 1:
        r = np.full(N, r[0])
    rep = find_critical(VortexConfig(ev, mu, X0), X0)
    if not rep.nondegenerate:
        raise DegenerateCritical("D^2H is (near) singular at the critical point")
    n = int(n_theta or max(4 * M, 64))
    n += n % 2
    solvers = [DiskSolver(profile, n) for _ in range(N)]
    if schedule is None:
        schedule = continuation_schedule(r, 0.1 * separation(ev, rep.X))
    X, beta = rep.X.copy(), np.zeros((N, M - 2, 2))
    history, prev = [], None
    for rr in schedule:
        rr = np.atleast_1d(np.asarray(rr, float))
        if prev is not None:
            beta = beta * (rr / prev)[:, None, None]

        def fun(u, rr=rr):
            Xu, bu = _unpack(u, N, M)
            return residual_smooth(ev, mu, Xu, bu, rr, profile, solvers, n, n_rad)[0].vector()

        residual_smooth(ev, mu, X, beta, rr, profile, solvers, n, n_rad, check=True)
        u, hist, _ = newton(fun, _pack(X, beta), tol, max_iter, threads)
        X, beta = _unpack(u, N, M)
        history.append({"r": rr.tolist(), "iterations": len(hist) - 1, "residuals": hist})
        if verbose:
            print(f"r={rr} iterations={len(hist) - 1} residual={hist[-1]:.2e}")
        prev = rr
    state = SteadyState(r, X, beta, mu, ev, M, n, n_rad, history=history)
    _, sys = residual_smooth(ev, mu, X, beta, r, profile, solvers, n, n_rad, check=True)
    state.diagnostics = {"residual_norm": history[-1]["residuals"][-1],
                         "critical_point": rep.X.tolist(),
                         "beta_norm": [float(np.linalg.norm(beta[j])) for j in range(N)],
                         "profile_kind": "smooth"}
    out = SmoothSteady(state, profile, sys)
    out.diagnostics = verify_smooth(out)
    return out


def verify_smooth(sol: SmoothSteady, tol_osc=1e-8):
    """Interior oscillation of Psi - psi_j, boundary constancy on a finer grid, budgets."""
    sys = sol.system
    st = sol.state
    fine = SmoothSystem(sys.ev, sys.mu, sys.shapes, sys.profile, 2 * sys.n, 2 * sys.n_rad)
    bnd = [float(np.ptp(p)) for p in fine.boundary_stream()]
    inner = []
    for j in range(sys.N):
        v = sys.stream_minus_local(j)
        inner.append(float(np.ptp(v)))
    budget = sys.vorticity_budget()
    return {"interior_oscillation": inner, "boundary_oscillation": bnd,
            "circulation_error": [float(abs(b[0])) for b in budget],
            "edge_vorticity_ratio": [float(b[1]) for b in budget],
            "disk_solve_residual": [d.solve_residual for d in sys.dens],
            "ok": bool(max(inner) <= tol_osc and max(bnd) <= tol_osc)}
