import json

import pytest

from nhfiber import cli
from nhfiber.config import ConfigError, load_config
from nhfiber.fem import ConvergenceError


def test_defaults_and_overrides():
    cfg = load_config("cap", None, ["mesh.h=0.05", "cap.a=0,1,0"])
    assert cfg["mesh.h"] == 0.05
    assert cfg["cap.a"] == [0.0, 1.0, 0.0]
    assert cfg["energy.kind"] == "isotropic"


@pytest.mark.parametrize("item", ["mesh.hh=1", "nosuch.key=1", "mesh.h=abc", "meshh", "mesh=1"])
def test_bad_overrides_name_the_key(item):
    with pytest.raises(ConfigError):
        load_config("cap", None, [item])


def test_unknown_subcommand():
    with pytest.raises(ConfigError):
        load_config("plot")


def test_ini_file(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[mesh]\nh = 0.2\n[energy]\nkind = p_norm\np = 3\n")
    cfg = load_config("cap", p, ["mesh.h=0.3"])
    assert cfg["mesh.h"] == 0.3 and cfg["energy.p"] == 3.0
    p.write_text("[mesh]\nsize = 0.2\n")
    with pytest.raises(ConfigError):
        load_config("cap", p)


def test_digest_tracks_values():
    a = load_config("cap", None, ["mesh.h=0.2"])
    b = load_config("cap", None, ["mesh.h=0.2"])
    c = load_config("cap", None, ["mesh.h=0.3"])
    assert a.digest() == b.digest() != c.digest()
    assert a.resolved()["mesh"]["h"] == "0.2"


def test_regime_json(tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["regime", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["gamma_p"] == pytest.approx(1.0)
    assert rec["kappa"] == "inf"


def test_cap_zero_motion_and_reproducible(tmp_path):
    o1, o2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["cap", "--set", "cap.a=0,0,0", "--set", "mesh.h=0.3"]
    assert cli.main(args + ["--out", str(o1)]) == 0
    assert cli.main(args + ["--out", str(o2)]) == 0
    assert o1.read_bytes() == o2.read_bytes()
    rows = [ln for ln in o1.read_text().splitlines() if not ln.startswith("#")]
    assert rows[0].split(",")[:4] == ["r", "R", "h", "value"]
    assert float(rows[1].split(",")[3]) == 0.0


def test_nonzero_cap_reproducible(tmp_path):
    o1, o2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["cap", "--set", "mesh.h=0.3", "--set", "energy.kind=p_norm", "--set", "energy.p=3"]
    cli.main(args + ["--out", str(o1)])
    cli.main(args + ["--out", str(o2)])
    assert o1.read_bytes() == o2.read_bytes()


def test_cell_output_has_form(capsys):
    assert cli.main(["cell", "--set", "mesh.h=0.2"]) == 0
    text = capsys.readouterr().out
    assert "# quadratic_form:" in text and "# config_digest:" in text


def test_config_error_exit_code(capsys):
    assert cli.main(["cap", "--set", "mesh.hh=1"]) == 2
    assert "mesh.hh" in capsys.readouterr().err


def test_solver_failure_writes_diagnostics(tmp_path, monkeypatch):
    def boom(cfg):
        raise ConvergenceError("stuck", None, [(1, 2.0, 3.0)])
    monkeypatch.setitem(cli.RUNNERS, "cap", boom)
    out = tmp_path / "x.csv"
    assert cli.main(["cap", "--out", str(out)]) == 3
    diag = json.loads((tmp_path / "x.diagnostics.json").read_text())
    assert diag["history"] == [[1.0, 2.0, 3.0]]


def test_sweep_files_named_by_parameter(tmp_path):
    d = tmp_path / "sw"
    assert cli.main(["sweep", "--set", "sweep.values=0.4, 0.3", "--out", str(d)]) == 0
    names = sorted(p.name for p in d.iterdir())
    assert names == ["cap_mesh-h_0.3.csv", "cap_mesh-h_0.4.csv"]


def test_verify_regimes_suite(capsys):
    assert cli.main(["verify", "--suite", "regimes"]) == 0
    assert "[PASS] 13" in capsys.readouterr().out
