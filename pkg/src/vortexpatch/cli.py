"""Batch front end: ``vortexpatch run <command> --config cfg.json --out dir``.

Commands: pv, critical, steady, stability, evolve, smooth.  Every run writes
deterministic JSON/CSV/SVG artifacts plus manifest.json (sha256 per file).
Exit codes: 0 ok, 2 bad config, 3 solver failure, 4 failed verification.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import domain as dom
from .errors import ConfigInvalid, VerificationError, VortexError

COMMANDS = ("pv", "critical", "steady", "stability", "evolve", "smooth")


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    domain: dict
    mus: list
    X0: list
    radii: list = field(default_factory=list)
    M: int = 32
    tol: float = 1e-10
    n_rad: int = 16
    threads: int | None = None
    pv: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    profile: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)

    @property
    def N(self):
        return len(self.mus)


def _num(v, path, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigInvalid(path, "expected a finite number")
    if integer and int(v) != v:
        raise ConfigInvalid(path, "expected an integer")
    if positive and not v > 0:
        raise ConfigInvalid(path, "must be positive")
    return int(v) if integer else float(v)


def _list(v, path):
    if not isinstance(v, list):
        raise ConfigInvalid(path, "expected a list")
    return v


def parse_config(raw: dict, command: str) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalid("$", "config must be a JSON object")
    known = {"domain", "mus", "X0", "radii", "M", "tol", "n_rad", "threads",
             "pv", "evolve", "profile", "stability"}
    for k in raw:
        if k not in known:
            raise ConfigInvalid(k, "unknown key")
    for k in ("domain", "mus", "X0"):
        if k not in raw:
            raise ConfigInvalid(k, "required")
    mus = [_num(m, f"mus[{i}]") for i, m in enumerate(_list(raw["mus"], "mus"))]
    if not mus:
        raise ConfigInvalid("mus", "at least one vortex is required")
    for i, m in enumerate(mus):
        if m == 0:
            raise ConfigInvalid(f"mus[{i}]", "strengths must be nonzero")
    X0 = [_num(x, f"X0[{i}]") for i, x in enumerate(_list(raw["X0"], "X0"))]
    if len(X0) != 2 * len(mus):
        raise ConfigInvalid("X0", f"expected {2 * len(mus)} coordinates")
    radii = []
    for i, r in enumerate(_list(raw.get("radii", []), "radii")):
        if isinstance(r, list):
            if len(r) != len(mus):
                raise ConfigInvalid(f"radii[{i}]", "per-patch radii need one entry per vortex")
            radii.append([_num(v, f"radii[{i}][{k}]", positive=True) for k, v in enumerate(r)])
        else:
            radii.append(_num(r, f"radii[{i}]", positive=True))
    for i in range(1, len(radii)):
        if not np.all(np.max(radii[i]) < np.min(radii[i - 1])):
            raise ConfigInvalid(f"radii[{i}]", "continuation radii must be strictly decreasing")
    if command in ("steady", "stability", "evolve", "smooth") and not radii:
        raise ConfigInvalid("radii", "required for this command")
    cfg = RunConfig(domain=_domain_block(raw["domain"]), mus=mus, X0=X0, radii=radii)
    if "M" in raw:
        cfg.M = _num(raw["M"], "M", positive=True, integer=True)
        if cfg.M < 4:
            raise ConfigInvalid("M", "truncation must be at least 4")
    if "tol" in raw:
        cfg.tol = _num(raw["tol"], "tol", positive=True)
    if "n_rad" in raw:
        cfg.n_rad = _num(raw["n_rad"], "n_rad", positive=True, integer=True)
    if raw.get("threads") is not None:
        cfg.threads = _num(raw["threads"], "threads", positive=True, integer=True)
    for blk in ("pv", "evolve", "profile", "stability"):
        v = raw.get(blk, {})
        if not isinstance(v, dict):
            raise ConfigInvalid(blk, "expected an object")
        setattr(cfg, blk, dict(v))
    if command == "pv":
        for k in ("T", "dt"):
            _num(cfg.pv.get(k, 1.0), f"pv.{k}", positive=True)
    if command == "evolve":
        for k in ("T", "dt"):
            if k not in cfg.evolve:
                raise ConfigInvalid(f"evolve.{k}", "required")
            _num(cfg.evolve[k], f"evolve.{k}", positive=True)
        if cfg.evolve.get("scheme", "rk4") not in ("rk4", "implicit-midpoint"):
            raise ConfigInvalid("evolve.scheme", "must be rk4 or implicit-midpoint")
    if command == "smooth":
        _num(cfg.profile.get("lambda", 1.0), "profile.lambda", positive=True)
        k = _num(cfg.profile.get("kappa", 1.0), "profile.kappa")
        if k < 0:
            raise ConfigInvalid("profile.kappa", "must be non-negative")
    return cfg


def _domain_block(d):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigInvalid("domain.kind", "required")
    kind = d["kind"]
    if kind == "disk":
        return {"kind": "disk", "radius": _num(d.get("radius", 1.0), "domain.radius", positive=True)}
    if kind == "annulus":
        a = _num(d.get("inner_radius", -1), "domain.inner_radius")
        if not 0 < a < 1:
            raise ConfigInvalid("domain.inner_radius", "must lie in (0, 1)")
        circ = [_num(c, f"domain.circulations[{i}]")
                for i, c in enumerate(_list(d.get("circulations", [0.0]), "domain.circulations"))]
        return {"kind": "annulus", "inner_radius": a, "circulations": circ}
    if kind == "bem":
        curves = []
        if "ellipse" in d:
            e = d["ellipse"]
            if not isinstance(e, dict):
                raise ConfigInvalid("domain.ellipse", "expected {a, b, n}")
            a = _num(e.get("a", 1.0), "domain.ellipse.a", positive=True)
            b = _num(e.get("b", 1.0), "domain.ellipse.b", positive=True)
            n = _num(e.get("n", 256), "domain.ellipse.n", positive=True, integer=True)
            curves.append(dom.ellipse_curve(a, b, n).tolist())
        for i, c in enumerate(_list(d.get("curves", []), "domain.curves")):
            pts = np.asarray(c, float) if isinstance(c, list) else None
            if pts is None or pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 32:
                raise ConfigInvalid(f"domain.curves[{i}]", "expected at least 32 [x, y] samples")
            curves.append(pts.tolist())
        if not curves:
            raise ConfigInvalid("domain.curves", "bem domain needs at least one curve")
        circ = [_num(c, f"domain.circulations[{i}]")
                for i, c in enumerate(_list(d.get("circulations", []), "domain.circulations"))]
        if len(circ) != len(curves) - 1:
            raise ConfigInvalid("domain.circulations", "one entry per inner boundary curve")
        return {"kind": "bem", "curves": curves, "circulations": circ}
    raise ConfigInvalid("domain.kind", f"unknown kind {kind!r}")


def build_domain(block):
    if block["kind"] == "disk":
        spec = dom.disk(block["radius"])
    elif block["kind"] == "annulus":
        spec = dom.annulus(block["inner_radius"], block["circulations"])
    else:
        spec = dom.bem_from_curves(block["curves"], block["circulations"])
    try:
        return dom.build_green_evaluator(spec)
    except ValueError as e:
        raise ConfigInvalid("domain", str(e)) from e


# ---------------------------------------------------------------------------
# deterministic writers
# ---------------------------------------------------------------------------

class Outputs:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _write(self, name, text):
        p = self.root / name
        p.write_text(text)
        if name not in self.files:
            self.files.append(name)

    def json(self, name, obj):
        self._write(name, json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")

    def csv(self, name, header, rows):
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        self._write(name, "\n".join(lines) + "\n")

    def text(self, name, s):
        self._write(name, s)

    def manifest(self, command, config_bytes):
        entries = []
        for name in sorted(self.files):
            data = (self.root / name).read_bytes()
            entries.append({"path": name, "bytes": len(data),
                            "sha256": hashlib.sha256(data).hexdigest()})
        self.json("manifest.json", {"command": command,
                                    "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
                                    "files": entries})


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return _plain(o.tolist())
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, float) and not np.isfinite(o):
        return str(o)
    return o


def svg_plot(series, width=480, height=480, title="", equal=True):
    """Minimal SVG: series = [(xs, ys, kind, colour)], kind in {'line', 'dots'}."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series])
    ys = np.concatenate([np.asarray(s[1], float) for s in series])
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    if equal:
        c, h = ((x0 + x1) / 2, (y0 + y1) / 2), max(x1 - x0, y1 - y0, 1e-12) * 0.55
        x0, x1, y0, y1 = c[0] - h, c[0] + h, c[1] - h, c[1] + h
    else:
        px, py = 0.05 * max(x1 - x0, 1e-12), 0.05 * max(y1 - y0, 1e-12)
        x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    sx = lambda x: 20 + (x - x0) / (x1 - x0) * (width - 40)
    sy = lambda y: height - 20 - (y - y0) / (y1 - y0) * (height - 40)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="20" y="14" font-size="12" font-family="sans-serif">{title}</text>']
    for xv, yv, kind, col in series:
        pts = [(sx(a), sy(b)) for a, b in zip(xv, yv)]
        if kind == "line":
            d = " ".join(f"{a:.3f},{b:.3f}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}" stroke-width="1.2"/>')
        else:
            out += [f'<circle cx="{a:.3f}" cy="{b:.3f}" r="2.2" fill="{col}"/>' for a, b in pts]
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _schedule(cfg):
    return [np.full(cfg.N, r) if np.isscalar(r) else np.asarray(r, float) for r in cfg.radii]


def _boundary_outputs(out, shapes, ev, prefix="boundaries"):
    from .patchgeom import boundary_eval, nodes
    th = nodes(256)
    series = []
    for c in ev.boundary_points():
        c = np.asarray(c)
        c = c[:, 0] + 1j * c[:, 1] if c.ndim == 2 else c
        c = np.r_[c, c[:1]]
        series.append((c.real, c.imag, "line", "#888888"))
    for j, s in enumerate(shapes):
        g = boundary_eval(s, th)[0]
        out.csv(f"{prefix}_{j}.csv", ["theta", "x", "y"], zip(th, g.real, g.imag))
        gg = np.r_[g, g[:1]]
        series.append((gg.real, gg.imag, "line", "#1f5fa8" if j % 2 == 0 else "#b23a2e"))
    out.text(f"{prefix}.svg", svg_plot(series, title="patch boundaries"))


def cmd_pv(cfg, ev, out, threads, verbose):
    from .pointvortex import VortexConfig, integrate_pv
    T = float(cfg.pv.get("T", 1.0))
    dt = float(cfg.pv.get("dt", 1e-2))
    vc = VortexConfig(ev, np.asarray(cfg.mus), np.asarray(cfg.X0))
    t, traj, H = integrate_pv(vc, None, T, dt)
    hdr = ["t"] + [f"{c}{j + 1}" for j in range(cfg.N) for c in ("x", "y")] + ["H"]
    out.csv("pv_trajectory.csv", hdr, (np.r_[ti, xi, hi] for ti, xi, hi in zip(t, traj, H)))
    drift = float(np.abs(H - H[0]).max())
    out.json("pv_summary.json", {"T": T, "dt": dt, "steps": len(t) - 1, "H0": float(H[0]),
                                 "H_drift": drift})
    series = [(traj[:, 2 * j], traj[:, 2 * j + 1], "line", "#1f5fa8") for j in range(cfg.N)]
    out.text("pv_trajectory.svg", svg_plot(series, title="point-vortex paths"))


def cmd_critical(cfg, ev, out, threads, verbose):
    from .pointvortex import VortexConfig, find_critical
    rep = find_critical(VortexConfig(ev, np.asarray(cfg.mus), np.asarray(cfg.X0)), np.asarray(cfg.X0))
    out.json("critical.json", rep.to_dict())


def _solve(cfg, ev, threads, verbose):
    from .steady import solve_steady
    sched = _schedule(cfg)
    return solve_steady(ev, cfg.mus, sched[-1], cfg.X0, tol=cfg.tol, M=cfg.M, n_rad=cfg.n_rad,
                        schedule=sched, threads=threads, verbose=verbose)


def _steady_outputs(out, st):
    from .patchgeom import nodes
    out.json("steady_state.json", st.to_dict())
    shapes = st.shapes()
    _boundary_outputs(out, shapes, st.ev)
    sysp = st.system()
    th = nodes(sysp.n)
    for j, psi in enumerate(sysp.boundary_stream()):
        out.csv(f"boundary_stream_{j}.csv", ["theta", "psi"], zip(th, psi))


def cmd_steady(cfg, ev, out, threads, verbose):
    st = _solve(cfg, ev, threads, verbose)
    _steady_outputs(out, st)
    d = st.diagnostics
    if not (d["oscillation_ok"] and d["area_ok"] and d["budget_ok"]):
        raise VerificationError(f"independent verification failed: oscillation "
                                f"{max(d['boundary_stream_oscillation']):.2e}, "
                                f"area {max(d['area_error']):.2e}")


def cmd_stability(cfg, ev, out, threads, verbose):
    from .linstab import analyze, fd_consistency
    st = _solve(cfg, ev, threads, verbose)
    _steady_outputs(out, st)
    sysL, rep = analyze(st)
    slow = set(int(i) for i in rep.slow_index)
    order = np.lexsort((rep.eigenvalues.imag, rep.eigenvalues.real, np.abs(rep.eigenvalues)))
    rows = [(float(rep.eigenvalues[i].real), float(rep.eigenvalues[i].imag),
             "slow" if i in slow else "fast", int(rep.mode_hint[i])) for i in order]
    out.csv("spectrum.csv", ["re", "im", "class", "mode_hint"], rows)
    report = rep.to_dict()
    report["symmetry_defect"] = sysL.symmetry_defect()
    if cfg.stability.get("fd_check", False):
        report["fd_consistency"] = fd_consistency(sysL).tolist()
    out.json("report.json", report)
    series = [(rep.fast.real, rep.fast.imag, "dots", "#1f5fa8"),
              (rep.slow.real, rep.slow.imag, "dots", "#b23a2e")]
    out.text("spectrum.svg", svg_plot(series, title="spectrum (slow in red)", equal=False))
    sl = [(rep.slow.real, rep.slow.imag, "dots", "#b23a2e"),
          (rep.b0_eigs.real, rep.b0_eigs.imag, "dots", "#1f5fa8")]
    out.text("slow_spectrum.svg", svg_plot(sl, title="slow block vs B0", equal=False))


def cmd_evolve(cfg, ev, out, threads, verbose):
    from .contour import EvolutionState, boundary_deviation, evolve
    st = _solve(cfg, ev, threads, verbose)
    _steady_outputs(out, st)
    shapes = st.shapes()
    amp = float(cfg.evolve.get("perturbation", 0.0))
    if amp:
        # kick the lowest deformation mode by amp * r
        kicked = []
        for s in shapes:
            b = s.beta.copy()
            b[0, 0] += amp * s.r
            kicked.append(s.replace(beta=b))
        shapes = kicked
    es = EvolutionState(ev, np.asarray(cfg.mus), shapes, 0.0, st.n_theta, st.n_rad)
    scheme = cfg.evolve.get("scheme", "rk4")
    snaps, fin = evolve(es, float(cfg.evolve["T"]), float(cfg.evolve["dt"]), scheme,
                        int(cfg.evolve.get("every", 10)),
                        enforce_dt=bool(cfg.evolve.get("enforce_dt", True)))
    out.text("trajectory.jsonl", "".join(s.to_json() + "\n" for s in snaps))
    Ep = [s.Ep for s in snaps]
    out.json("evolve_summary.json", {
        "scheme": scheme, "snapshots": len(snaps), "T": float(cfg.evolve["T"]),
        "dt": float(cfg.evolve["dt"]), "Ep_drift": float(max(Ep) - min(Ep)),
        "max_area_error": max(s.diagnostics["area_error"] for s in snaps),
        "boundary_deviation": boundary_deviation(shapes, fin.shapes)})
    _boundary_outputs(out, fin.shapes, ev, prefix="final")


def cmd_smooth(cfg, ev, out, threads, verbose):
    from .smoothprofile import dh_profile_eigs, radial_ground_state, solve_steady_smooth
    p = cfg.profile
    prof = radial_ground_state(float(p.get("lambda", 1.0)), float(p.get("kappa", 1.0)),
                               int(p.get("n_cheb", 49)))
    eig = dh_profile_eigs(prof, min(cfg.M, int(p.get("eig_modes", 16))))
    pd = prof.to_dict()
    pd["dh_eigs"] = {"m": eig["m"], "lambda": eig["lambda"], "offband": eig["offband"],
                     "min_abs": eig["min_abs"]}
    out.json("profile.json", pd)
    sched = _schedule(cfg)
    sol = solve_steady_smooth(ev, cfg.mus, sched[-1], cfg.X0, prof, tol=max(cfg.tol, 1e-9),
                              M=cfg.M, n_rad=cfg.n_rad, schedule=sched, threads=threads,
                              verbose=verbose)
    out.json("smooth_steady.json", sol.to_dict())
    _boundary_outputs(out, sol.state.shapes(), ev)
    if not sol.diagnostics["ok"]:
        raise VerificationError("smooth steady state failed the oscillation check")


HANDLERS = {"pv": cmd_pv, "critical": cmd_critical, "steady": cmd_steady,
            "stability": cmd_stability, "evolve": cmd_evolve, "smooth": cmd_smooth}


def run(command, config_path, out_dir, threads=None, verbose=False) -> int:
    """Run one command; returns the process exit status."""
    try:
        if command not in COMMANDS:
            raise ConfigInvalid("command", f"unknown command {command!r}")
        try:
            raw_bytes = Path(config_path).read_bytes()
            raw = json.loads(raw_bytes)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigInvalid("$", f"cannot read config: {e}") from e
        cfg = parse_config(raw, command)
        nthreads = threads or cfg.threads or os.cpu_count() or 1
        ev = build_domain(cfg.domain)
        out = Outputs(Path(out_dir))
        HANDLERS[command](cfg, ev, out, nthreads, verbose)
        out.manifest(command, raw_bytes)
        return 0
    except VortexError as e:
        print(f"error [{type(e).__name__}]: {e}", file=sys.stderr)
        return e.exit_code


def main(argv=None):
    ap = argparse.ArgumentParser(prog="vortexpatch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run one pipeline")
    r.add_argument("command", choices=COMMANDS)
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--verbose", action="store_true")
    a = ap.parse_args(argv)
    return run(a.command, a.config, a.out, a.threads, a.verbose)


if __name__ == "__main__":
    sys.exit(main())
