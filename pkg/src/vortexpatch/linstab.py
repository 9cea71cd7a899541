"""Linearisation of the patch dynamics at a steady state.

Coordinates: for each patch the boundary normal-velocity density
f_j = y_j . (cos, sin) + sum_{k=2}^{M} (A_k cos k + B_k sin k).  The symmetric
form L comes from the kernel representation

    F_j = mu_j m_j f_j - sum_j' mu_j mu_j' / (pi r_j r_j') oint G0(Gamma_j, Gamma_j') f_j',
    m_j = |dGamma_j|^{-1} d_N Psi o Gamma_j,

and the conjugated operator is Atilde = Jmat L with Jmat = diag(mu_j^{-1} d/dtheta),
which on mode 1 is -Lambda^{-1} J_N.  Raw (X, beta) coordinates are reached through
the Q conjugation (x_j, beta_j) = r_j Q(r_j, beta_*j) f_j.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, EigSolverFailure, FixedPointDiverged, NotSteady
from .induction import PatchSystem, TWO_PI, kress_weights
from .patchgeom import nodes, q_apply
from .pointvortex import VortexConfig, grad_hessian, symplectic


@dataclass
class ModeBasis:
    N: int
    M: int
    r: np.ndarray

    @property
    def dim(self):
        return 2 * self.N + 2 * self.N * (self.M - 1)

    @property
    def ny(self):
        return 2 * self.N

    def index(self, j, k, part):
        """part 0 = cos, 1 = sin; k = 1 goes to the y block."""
        if k == 1:
            return 2 * j + part
        return 2 * self.N + j * 2 * (self.M - 1) + 2 * (k - 2) + part

    def modes(self):
        """(patch, mode, part) for every coordinate, in index order."""
        out = [None] * self.dim
        for j in range(self.N):
            for k in range(1, self.M + 1):
                for p in (0, 1):
                    out[self.index(j, k, p)] = (j, k, p)
        return out

    def samples(self, j, n):
        """n x dim matrix of basis functions of patch j evaluated at nodes."""
        th = nodes(n)
        E = np.zeros((n, self.dim))
        for k in range(1, self.M + 1):
            E[:, self.index(j, k, 0)] = np.cos(k * th)
            E[:, self.index(j, k, 1)] = np.sin(k * th)
        return E

    def Mr_inv_Y(self):
        """Diagonal of M_r^{-1} on the Y block."""
        return np.repeat(1.0 / self.r, 2 * (self.M - 1))

    def projections(self):
        P0 = np.zeros((self.dim, self.dim))
        P0[:self.ny, :self.ny] = np.eye(self.ny)
        return P0, np.eye(self.dim) - P0


@dataclass
class LinearizedSystem:
    basis: ModeBasis
    L: np.ndarray
    Jmat: np.ndarray
    state: object = field(repr=False)
    B0: np.ndarray = None
    hessian: np.ndarray = None

    @property
    def A(self):
        return self.Jmat @ self.L

    def blocks(self):
        A = self.A
        ny = self.basis.ny
        return A[:ny, :ny], A[:ny, ny:], A[ny:, :ny], A[ny:, ny:]

    def symmetry_defect(self):
        return float(np.abs(self.L - self.L.T).max() / np.abs(self.L).max())


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    slow: np.ndarray
    fast: np.ndarray
    slow_index: np.ndarray
    b0_eigs: np.ndarray
    slow_deviation: float
    fast_real_floor: float
    pairing_defect: float
    gap_ratio: float
    verdict: str
    positivity: float | None = None
    graph_norms: dict = field(default_factory=dict)
    mode_hint: np.ndarray = None

    def to_dict(self):
        c = lambda z: [[float(v.real), float(v.imag)] for v in z]
        return {"verdict": self.verdict, "slow": c(self.slow), "b0_eigs": c(self.b0_eigs),
                "slow_deviation": self.slow_deviation, "fast_real_floor": self.fast_real_floor,
                "pairing_defect": self.pairing_defect, "gap_ratio": self.gap_ratio,
                "positivity": self.positivity, "graph_norms": self.graph_norms,
                "n_eigenvalues": int(len(self.eigenvalues))}


# ---------------------------------------------------------------------------

def kernel_blocks(sys: PatchSystem):
    """Quadrature matrices K[j][k] with oint G0(Gamma_j(s), Gamma_k(t)) f(t) dt ~ K @ f."""
    n = sys.n
    w = TWO_PI / n
    R = kress_weights(n)
    th = nodes(n)
    out = [[None] * sys.N for _ in range(sys.N)]
    for j, sj in enumerate(sys.samples):
        for k, sk in enumerate(sys.samples):
            if k < j:
                out[j][k] = out[k][j].T
                continue
            reg = sys.ev.reg0_matrix(sj.g, sk.g)
            if j == k:
                diff = sj.g[:, None] - sj.g[None, :]
                s = th[:, None] - th[None, :]
                with np.errstate(divide="ignore", invalid="ignore"):
                    lam = np.log(np.abs(diff) / np.abs(2 * np.sin(s / 2)))
                np.fill_diagonal(lam, np.log(np.abs(sj.dg)))
                lam = 0.5 * (lam + lam.T)
                logpart = 0.5 * R + w * lam
                reg = 0.5 * (reg + reg.T)
            else:
                logpart = w * np.log(np.abs(sj.g[:, None] - sk.g[None, :]))
            out[j][k] = -logpart / TWO_PI + w * reg
    return out


def jmat(basis: ModeBasis, mu):
    J = np.zeros((basis.dim, basis.dim))
    for j in range(basis.N):
        for k in range(1, basis.M + 1):
            c, s = basis.index(j, k, 0), basis.index(j, k, 1)
            J[c, s] = k / mu[j]
            J[s, c] = -k / mu[j]
    return J


def assemble_L(state, M=None, n_theta=None, steady_tol=1e-8) -> LinearizedSystem:
    """Symmetric L on f-modes 1..M per patch at a solved SteadyState."""
    M = M or state.M
    res = state.diagnostics.get("residual_norm")
    if res is not None and res > steady_tol:
        raise NotSteady(f"steady residual {res:.2e} exceeds {steady_tol:.0e}")
    n = n_theta or max(4 * (M + 1), 64)
    sys = PatchSystem(state.ev, state.mu, state.shapes(), n, state.n_rad)
    basis = ModeBasis(state.N, M, np.asarray(state.r, float))
    w = TWO_PI / n
    m = sys.normal_derivative()
    K = kernel_blocks(sys)
    E = [basis.samples(j, n) for j in range(state.N)]
    mu, r = state.mu, state.r
    B = np.zeros((basis.dim, basis.dim))
    for j in range(state.N):
        B += mu[j] * w * E[j].T @ (m[j][:, None] * E[j])
        for k in range(state.N):
            B -= mu[j] * mu[k] / (np.pi * r[j] * r[k]) * w * E[j].T @ K[j][k] @ E[k]
    L = B / np.pi
    _, Hs = grad_hessian(VortexConfig(state.ev, mu, state.X))
    return LinearizedSystem(basis, L, jmat(basis, mu), state, symplectic(mu) @ Hs, Hs)


def assemble_A(sysL: LinearizedSystem, v=None):
    A = sysL.A
    if v is not None:
        v = np.asarray(v)
        if v.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"vector of length {v.shape[0]} for operator of size {A.shape[1]}")
        return A @ v
    return A


# --- conjugation to raw (X, physical beta) coordinates ------------------------

def q_matrix(sysL: LinearizedSystem):
    """Matrix of f -> (x_j, beta_j) = r_j Q(r_j, beta_*j) f_j; shapes padded to M+1."""
    b = sysL.basis
    shapes = sysL.state.shapes(pad_to=b.M + 1)
    n = 16 * (b.M + 2)
    Q = np.zeros((b.dim, b.dim))
    th = nodes(n)
    rows = raw_index(b)
    for j, s in enumerate(shapes):
        for k in range(1, b.M + 1):
            for p, fn in ((0, np.cos), (1, np.sin)):
                y, a = q_apply(s, fn(k * th))
                col = b.index(j, k, p)
                Q[rows[j][:2], col] = s.r * y
                Q[rows[j][2:], col] = s.r * a.ravel()
    return Q


def raw_index(b: ModeBasis):
    """Raw coordinate ordering: per patch [x (2), beta modes 3..M+1 (2(M-1))]."""
    per = 2 * b.M
    return [np.arange(j * per, (j + 1) * per) for j in range(b.N)]


def raw_operator(sysL: LinearizedSystem):
    Q = q_matrix(sysL)
    return Q @ sysL.A @ np.linalg.inv(Q), Q


def fd_consistency(sysL: LinearizedSystem, n_dirs=10, eps=None, seed=0):
    """Relative errors |FD(rhs) - A v| / |A v| for random raw directions.

    The rhs is O(1/r^2) stiff, so the default step is 1e-3 * min(r) to keep
    cancellation error below the linearization error.
    """
    from .contour import rhs_shapes
    st = sysL.state
    b = sysL.basis
    Araw, _ = raw_operator(sysL)
    shapes = st.shapes(pad_to=b.M + 1)
    rows = raw_index(b)
    rng = np.random.default_rng(seed)
    if eps is None:
        eps = 1e-3 * float(np.min(st.r))

    def f(u):
        sh = []
        for j, s in enumerate(shapes):
            seg = u[rows[j]]
            sh.append(s.replace(x=s.x + complex(seg[0], seg[1]), beta=s.beta + seg[2:].reshape(-1, 2)))
        Xd, bd = rhs_shapes(st.ev, st.mu, sh, None, st.n_rad, check=False)
        out = np.zeros(b.dim)
        for j in range(b.N):
            out[rows[j][:2]] = Xd[2 * j:2 * j + 2]
            out[rows[j][2:]] = bd[j].ravel()
        return out

    errs = []
    for _ in range(n_dirs):
        v = np.zeros(b.dim)
        for j, s in enumerate(shapes):
            v[rows[j][:2]] = rng.normal(size=2)
            mm = np.arange(3, b.M + 2)
            v[rows[j][2:]] = (s.r * rng.normal(size=(b.M - 1, 2)) / mm[:, None] ** 2).ravel()
        v /= np.linalg.norm(v)
        fd = (f(eps * v) - f(-eps * v)) / (2 * eps)
        Av = Araw @ v
        errs.append(float(np.linalg.norm(fd - Av) / np.linalg.norm(Av)))
    return np.array(errs)


# --- spectrum -------------------------------------------------------------------

def _pairing_defect(ev):
    """max distance from each eigenvalue to the nearest -lambda and conj(lambda)."""
    scale = np.maximum(np.abs(ev), 1.0)
    d1 = np.abs(ev[:, None] + ev[None, :]).min(1) / scale
    d2 = np.abs(ev[:, None] - np.conj(ev)[None, :]).min(1) / scale
    return float(max(d1.max(), d2.max()))


def b0_verdict(B0, Hs, tol=1e-9):
    ev, V = np.linalg.eig(B0)
    scale = max(1.0, np.abs(ev).max())
    if np.any(np.abs(ev.real) > tol * scale):
        return "unstable-trichotomy"
    heig = np.linalg.eigvalsh(0.5 * (Hs + Hs.T))
    if np.all(heig > 0) or np.all(heig < 0):
        return "stable"
    if np.all(np.abs(ev) > tol * scale):
        # Krein-type test: D^2H definite on the real invariant plane of each +-i w pair
        ok = True
        for i in np.where(ev.imag > 0)[0]:
            P = np.column_stack([V[:, i].real, V[:, i].imag])
            close = np.where(np.abs(ev - ev[i]) < 1e-6 * scale)[0]
            P = np.column_stack([np.column_stack([V[:, c].real, V[:, c].imag]) for c in close])
            h = np.linalg.eigvalsh(P.T @ Hs @ P)
            if not (np.all(h > 0) or np.all(h < 0)):
                ok = False
        if ok:
            return "strongly-stable"
    return "inconclusive"


def spectrum_classify(sysL: LinearizedSystem, r=None) -> SpectrumReport:
    A = sysL.A
    try:
        ev, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as e:
        raise EigSolverFailure(str(e)) from e
    if not np.all(np.isfinite(ev)):
        raise EigSolverFailure("non-finite eigenvalues")
    n2 = sysL.basis.ny
    order = np.argsort(np.abs(ev), kind="stable")
    mags = np.abs(ev[order])
    lo, hi = max(1, n2 - 1), min(len(ev) - 1, n2 + 1)
    ratios = mags[1:] / np.maximum(mags[:-1], 1e-300)
    cut = lo - 1 + int(np.argmax(ratios[lo - 1:hi]))
    slow_idx = order[:cut + 1]
    fast_idx = order[cut + 1:]
    slow, fast = ev[slow_idx], ev[fast_idx]
    b0 = np.linalg.eigvals(sysL.B0)
    if len(slow) == len(b0):
        C = np.abs(slow[:, None] - b0[None, :])
        ri, ci = linear_sum_assignment(C)
        dev = float(C[ri, ci].max())
    else:
        dev = float("inf")
    fr = float((np.abs(fast.real) / np.abs(fast)).max()) if fast.size else 0.0
    verdict = b0_verdict(sysL.B0, sysL.hessian)
    # modes: dominant basis coordinate of each eigenvector
    modes = np.array([m[1] for m in sysL.basis.modes()])
    hint = modes[np.argmax(np.abs(V), axis=0)]
    return SpectrumReport(ev, slow, fast, slow_idx, b0, dev, fr, _pairing_defect(ev),
                          float(ratios[cut]), verdict, mode_hint=hint)


def kelvin_prediction(mu, r, k):
    return mu * (k - 1) / (2 * np.pi * r ** 2)


# --- invariant graphs -------------------------------------------------------------

def invariant_split(sysL: LinearizedSystem, tol=1e-13, max_iter=200):
    """Graphs Z0 = {(y, S0 y)} and ZY = {(SY a, a)} invariant under Atilde."""
    A00, A0Y, AY0, AYY = sysL.blocks()
    lu = linalg.lu_factor(AYY)
    S0 = np.zeros_like(AY0)
    hist = []
    for it in range(max_iter):
        new = linalg.lu_solve(lu, S0 @ A00 + S0 @ A0Y @ S0 - AY0)
        d = np.abs(new - S0).max()
        hist.append(d)
        S0 = new
        if d <= tol * max(1.0, np.abs(S0).max()):
            break
        if it > 3 and d > 10 * hist[-2] or not np.isfinite(d):
            raise FixedPointDiverged("S0 iteration diverged")
    else:
        raise FixedPointDiverged("S0 iteration did not converge")
    SY = np.zeros_like(A0Y)
    histY = []
    for it in range(max_iter):
        rhs = A00 @ SY + A0Y - SY @ AY0 @ SY
        new = linalg.lu_solve(lu, rhs.T, trans=1).T
        d = np.abs(new - SY).max()
        histY.append(d)
        SY = new
        if d <= tol * max(1.0, np.abs(SY).max()):
            break
        if it > 3 and d > 10 * histY[-2] or not np.isfinite(d):
            raise FixedPointDiverged("SY iteration diverged")
    else:
        raise FixedPointDiverged("SY iteration did not converge")
    A = sysL.A
    ny = sysL.basis.ny
    G0 = np.vstack([np.eye(ny), S0])
    res0 = A @ G0 - G0 @ (A00 + A0Y @ S0)
    GY = np.vstack([SY, np.eye(AYY.shape[0])])
    resY = A @ GY - GY @ (AY0 @ SY + AYY)
    mr = sysL.basis.Mr_inv_Y()
    norms = {
        "Mr_inv_S0": float(np.linalg.norm(mr[:, None] * S0, 2)),
        "SY_Mr_inv": float(np.linalg.norm(SY * mr[None, :], 2)),
        "invariance_Z0": float(np.abs(res0).max() / np.abs(A @ G0).max()),
        "invariance_ZY": float(np.abs(resY).max() / np.abs(A @ GY).max()),
        "contraction_S0": float(hist[-1] / hist[-2]) if len(hist) > 1 and hist[-2] > 0 else 0.0,
        "iterations": [len(hist), len(histY)],
    }
    return S0, SY, norms


def positivity_on_ZY(sysL: LinearizedSystem, SY):
    """min <L v, v> / |M_r^{-1} alpha|^2 over v = (SY a, a); returns (min, margin flag)."""
    GY = np.vstack([SY, np.eye(SY.shape[1])])
    Q = GY.T @ sysL.L @ GY
    Q = 0.5 * (Q + Q.T)
    D = np.diag(sysL.basis.Mr_inv_Y() ** 2)
    lam = linalg.eigh(Q, D, eigvals_only=True)
    return float(lam.min()), bool(lam.min() > 0)


def quadratic_form_drift(sysL: LinearizedSystem, t=1.0):
    E = linalg.expm(t * sysL.A)
    return float(np.abs(E.T @ sysL.L @ E - sysL.L).max() / np.abs(sysL.L).max())


def analyze(state, M=None):
    """Full pipeline: L, spectrum, graphs, positivity."""
    sysL = assemble_L(state, M)
    rep = spectrum_classify(sysL, state.r)
    try:
        S0, SY, norms = invariant_split(sysL)
        rep.graph_norms = norms
        rep.positivity, _ = positivity_on_ZY(sysL, SY)
    except FixedPointDiverged as e:
        rep.graph_norms = {"error": str(e)}
    return sysL, rep
