import json
import subprocess
import sys

import pytest

from peppy import __version__
from peppy.cli import main, run
from peppy.fab import read_pbm, read_stl
from peppy.rama import import_map_csv

SUBCOMMANDS = ["import", "build", "measure", "clash", "fold", "export", "validate"]


def peppy(*args):
    return run(["peppy", *map(str, args)])


@pytest.fixture
def alpha_pbm(tmp_path):
    out = tmp_path / "m.pbm"
    r = peppy("build", "--seq", "A" * 13, "--conf", "alpha_helix", "--out", out)
    assert r.exit_code == 0, r.report
    return out


def test_unknown_subcommand():
    assert peppy("frobnicate").exit_code == 2
    assert run(["peppy"]).exit_code == 2


def test_unknown_flag(alpha_pbm):
    r = peppy("clash", alpha_pbm, "--bogus")
    assert r.exit_code == 2 and "bogus" in r.report


def test_version():
    r = peppy("--version")
    assert r.exit_code == 0 and __version__ in r.report


@pytest.mark.parametrize("cmd", SUBCOMMANDS + ["rama", "rama feasibility", "rama histogram", "rama compare"])
def test_help_documents_flags(cmd):
    r = peppy(*cmd.split(), "--help")
    assert r.exit_code == 0
    assert "usage:" in r.report
    if cmd in ("build", "export", "fold"):
        assert "--out" in r.report


def test_build_export_stl(alpha_pbm, tmp_path):
    stl = tmp_path / "m.stl"
    r = peppy("export", alpha_pbm, "--format", "stl", "--out", stl)
    assert r.exit_code == 0
    data = stl.read_bytes()
    normals, _ = read_stl(data)
    assert len(data) == 84 + 50 * len(normals)


def test_build_from_json_file(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps([[None, 120.0], [-60.0, 130.0], [-70.0, None]]))
    out = tmp_path / "x.pbm"
    assert peppy("build", "--seq", "GLY-ALA-SER", "--conf", conf, "--out", out).exit_code == 0
    b = read_pbm(out.read_bytes())
    assert b.conformation.pairs()[1] == (-60.0, 130.0)


def test_build_errors(tmp_path):
    out = tmp_path / "x.pbm"
    r = peppy("build", "--seq", "AXA", "--conf", "alpha_helix", "--out", out)
    assert r.exit_code == 1 and "UnknownResidue" in r.report
    r = peppy("build", "--seq", "AAA", "--conf", "corkscrew", "--out", out)
    assert r.exit_code == 1 and "UnknownConformation" in r.report
    assert not out.exists()


def test_measure(alpha_pbm):
    r = peppy("measure", alpha_pbm, "--feature", "ca:1-13", "--feature", "hbonds")
    assert r.exit_code == 0
    assert len(r.report.splitlines()) >= 2
    r = peppy("measure", alpha_pbm, "--feature", "ca:1-13", "--csv")
    assert r.exit_code == 0 and "," in r.report
    r = peppy("measure", alpha_pbm, "--feature", "nonsense")
    assert r.exit_code == 1 and "BadFeature" in r.report


def test_clash_reports(alpha_pbm, tmp_path):
    assert peppy("clash", alpha_pbm).report.startswith("0 clashes")
    bad = tmp_path / "bad.pbm"
    assert peppy("build", "--seq", "AAAAAA", "--conf", _flat(tmp_path, 6), "--out", bad).exit_code == 0
    r = peppy("clash", bad)
    assert r.exit_code == 0 and not r.report.startswith("0 clashes")


def _flat(tmp_path, n):
    p = tmp_path / "flat.json"
    p.write_text(json.dumps({"phi": [None] + [0.0] * (n - 1), "psi": [0.0] * (n - 1) + [None]}))
    return p


def test_fold_and_trajectory(tmp_path):
    start = tmp_path / "s.pbm"
    conf = tmp_path / "near.json"
    conf.write_text(json.dumps([[None, -44.0]] + [[-60.0, -44.0]] * 4 + [[-60.0, None]]))
    assert peppy("build", "--seq", "AAAAAA", "--conf", conf, "--out", start).exit_code == 0
    out, traj = tmp_path / "f.pbm", tmp_path / "t.txt"
    r = peppy("fold", start, "--out", out, "--trajectory", traj)
    assert r.exit_code == 0 and r.report.startswith("converged")
    lines = traj.read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) > 2
    folded = read_pbm(out.read_bytes())
    assert abs(folded.conformation.pairs()[2][0] + 57.0) < 2.0


def test_import(tmp_path, alpha_pbm):
    pdb = tmp_path / "m.pdb"
    assert peppy("export", alpha_pbm, "--format", "pdb", "--out", pdb).exit_code == 0
    out = tmp_path / "i.pbm"
    r = peppy("import", pdb, "--chain", "A", "--out", out)
    assert r.exit_code == 0
    b = read_pbm(out.read_bytes())
    assert len(b.conformation) == 13
    assert abs(b.conformation.pairs()[5][0] + 57.0) < 0.2
    r = peppy("import", pdb, "--chain", "Z", "--out", out)
    assert r.exit_code == 1 and "UnknownChain" in r.report


def test_missing_input(tmp_path):
    r = peppy("clash", tmp_path / "nope.pbm")
    assert r.exit_code == 1 and "FileNotFoundError" in r.report


def test_malformed_pbm(tmp_path):
    p = tmp_path / "bad.pbm"
    p.write_text("{nope")
    r = peppy("clash", p)
    assert r.exit_code == 1 and "MalformedPBM" in r.report


def test_rama_pipeline(tmp_path, alpha_pbm):
    feas, hist = tmp_path / "f.csv", tmp_path / "h.csv"
    assert peppy("rama", "feasibility", "--out", feas).exit_code == 0
    assert peppy("rama", "histogram", alpha_pbm, "--out", hist).exit_code == 0
    assert import_map_csv(hist.read_bytes()).total() == 11
    r = peppy("rama", "compare", "--observed", hist, "--feasible", feas)
    assert r.exit_code == 0 and r.report.startswith("coverage score 1.0000")
    pgm = tmp_path / "f.pgm"
    assert peppy("rama", "feasibility", "--format", "pgm", "--out", pgm).exit_code == 0
    assert pgm.read_bytes().startswith(b"P5\n36 36\n255\n")
    assert peppy("rama", "feasibility", "--bin", "7", "--out", feas).exit_code == 1


def test_outputs_are_byte_identical(tmp_path, alpha_pbm):
    blobs = []
    for k in range(2):
        stl, pdb, pbm = tmp_path / f"{k}.stl", tmp_path / f"{k}.pdb", tmp_path / f"{k}.pbm"
        peppy("export", alpha_pbm, "--format", "stl", "--subdiv", "1", "--out", stl)
        peppy("export", alpha_pbm, "--format", "pdb", "--out", pdb)
        peppy("fold", alpha_pbm, "--out", pbm)
        blobs.append((stl.read_bytes(), pdb.read_bytes(), pbm.read_bytes()))
    assert blobs[0] == blobs[1]


def test_config_override(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    radii = {"C": 1.9, "N": 1.55, "O": 1.52, "H": 1.2, "S": 1.8}
    cfg.write_text(json.dumps({"vdw_radii": radii}))
    out = tmp_path / "m.pbm"
    assert peppy("--config", cfg, "build", "--seq", "AA", "--conf", "alpha_helix", "--out", out).exit_code == 0
    assert read_pbm(out.read_bytes()).scale.vdw_radii["C"] == 1.9
    monkeypatch.setenv("PEPPY_CONFIG", str(cfg))
    assert peppy("build", "--seq", "AA", "--conf", "alpha_helix", "--out", out).exit_code == 0
    assert read_pbm(out.read_bytes()).scale.vdw_radii["C"] == 1.9


def test_validate_subset():
    r = peppy("validate", "--criteria", "1,2")
    assert r.exit_code == 0
    assert "[PASS] 1." in r.report and "[PASS] 2." in r.report
    assert peppy("validate", "--criteria", "42").exit_code == 2


def test_main_and_console_script(tmp_path, capsys):
    assert main(["peppy", "--version"]) == 0
    assert __version__ in capsys.readouterr().out
    proc = subprocess.run([sys.executable, "-m", "peppy.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
