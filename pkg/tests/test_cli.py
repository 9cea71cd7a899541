import hashlib
import json

import pytest
from hypothesis import given, settings, strategies as st

from vortexpatch.cli import main, parse_config, run
from vortexpatch.errors import ConfigInvalid

BASE = {"domain": {"kind": "disk", "radius": 1.0}, "mus": [1.0], "X0": [0.2, 0.0],
        "radii": [0.05, 0.02], "M": 8}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 0.5), min_size=2, max_size=5))
def test_radii_must_strictly_decrease(radii):
    cfg = dict(BASE, radii=radii)
    bad = next((i for i in range(1, len(radii)) if not radii[i] < radii[i - 1]), None)
    if bad is None:
        parse_config(cfg, "steady")
    else:
        with pytest.raises(ConfigInvalid) as e:
            parse_config(cfg, "steady")
        assert e.value.path == f"radii[{bad}]"


@pytest.mark.parametrize("patch,path", [
    ({"radii": [0.05, -0.01]}, "radii[1]"),
    ({"mus": [0.0]}, "mus[0]"),
    ({"X0": [0.1]}, "X0"),
    ({"M": 2}, "M"),
    ({"domain": {"kind": "torus"}}, "domain.kind"),
    ({"domain": {"kind": "annulus", "inner_radius": 1.3}}, "domain.inner_radius"),
    ({"colour": "red"}, "colour"),
])
def test_config_paths(patch, path):
    with pytest.raises(ConfigInvalid) as e:
        parse_config(dict(BASE, **patch), "steady")
    assert e.value.path == path


def test_pv_run_is_deterministic(tmp_path):
    cfg = _write(tmp_path, dict(BASE, pv={"T": 0.5, "dt": 0.05}))
    assert run("pv", cfg, tmp_path / "a") == 0
    assert main(["run", "pv", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    ma = (tmp_path / "a" / "manifest.json").read_bytes()
    assert ma == (tmp_path / "b" / "manifest.json").read_bytes()
    for f in json.loads(ma)["files"]:
        data = (tmp_path / "a" / f["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == f["sha256"]
    header = (tmp_path / "a" / "pv_trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x1,y1,H"


def test_steady_and_stability_runs(tmp_path):
    cfg = _write(tmp_path, dict(BASE, X0=[0.05, 0.0], mus=[6.283185307179586]))
    assert run("stability", cfg, tmp_path / "s", threads=1) == 0
    rep = json.loads((tmp_path / "s" / "report.json").read_text())
    assert rep["verdict"] == "stable"
    rows = (tmp_path / "s" / "spectrum.csv").read_text().splitlines()
    assert rows[0] == "re,im,class,mode_hint" and len(rows) == 1 + rep["n_eigenvalues"]
    assert (tmp_path / "s" / "boundaries.svg").read_text().startswith("<svg")


def test_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, dict(BASE, radii=[0.01, 0.02]), "bad.json")
    assert run("steady", bad, tmp_path / "o") == 2
    assert "radii[1]" in capsys.readouterr().err
    (tmp_path / "junk.json").write_text("{not json")
    assert run("pv", tmp_path / "junk.json", tmp_path / "o") == 2
    # equal same-sign pair in the disk: no critical point, solver failure
    nocrit = _write(tmp_path, dict(BASE, mus=[1.0, 1.0], X0=[0.3, 0.0, -0.3, 0.0]), "nc.json")
    assert run("critical", nocrit, tmp_path / "o") == 3
