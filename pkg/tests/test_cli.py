import math

import numpy as np
import pytest

from neumann_hadamard.cli import CSV_HEADER, WORKERS_ENV, main

DILATION_CFG = """\
[domain]
a = 1.0
[family]
class = smooth
profile = const
[epsilon]
start = 0.04
factor = 0.5
count = 3
[mesh]
min_angular = 128
"""


def _write(tmp_path, text, name="study.cfg"):
    p = tmp_path / name
    p.write_text(text + f"[output]\ndir = {tmp_path / 'out'}\n", encoding="utf-8")
    return str(p)


def _read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# neumann-hadamard report schema=1")
    assert lines[1] == CSV_HEADER
    return [dict(zip(CSV_HEADER.split(","), ln.split(","))) for ln in lines[2:]]


def test_oracle_square(capsys):
    assert main(["oracle", "--shape", "square", "--count", "4"]) == 0
    assert capsys.readouterr().out.strip() == "0, 9.8696, 9.8696, 19.7392"


def test_oracle_disk(capsys):
    assert main(["oracle", "--shape", "disk", "--count", "5"]) == 0
    assert capsys.readouterr().out.strip() == "0, 3.39, 3.39, 9.3284, 9.3284"


def test_eig_disk(tmp_path, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    dump = tmp_path / "mesh.txt"
    assert main(["eig", "--config", cfg, "--count", "5", "--mesh-dump", str(dump)]) == 0
    vals = [float(v) for v in capsys.readouterr().out.split(",")]
    np.testing.assert_allclose(vals[1:], [3.39, 3.39, 9.3284, 9.3284], rtol=5e-3)
    assert dump.read_text().startswith(("v ", "#"))


def test_predict_zero(tmp_path, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    assert main(["predict", "--config", cfg, "--epsilon", "0"]) == 0
    out = capsys.readouterr().out
    kap = out.split("kappa = ")[1].split(",")
    assert [float(k) for k in kap] == [0.0, 0.0]


def test_predict_dilation(tmp_path, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    assert main(["predict", "--config", cfg, "--epsilon", "0.01"]) == 0
    kap = [float(k) for k in capsys.readouterr().out.split("kappa = ")[1].split(",")]
    np.testing.assert_allclose(kap, -2 * 3.39 * 0.01, rtol=1e-2)


def test_predict_negative_epsilon(tmp_path, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    assert main(["predict", "--config", cfg, "--epsilon", "-0.01", "--form", "volume"]) == 0
    kap = [float(k) for k in capsys.readouterr().out.split("kappa = ")[1].split(",")]
    np.testing.assert_allclose(kap, 2 * 3.39 * 0.01, rtol=1e-2)


def test_study_dilation_csv(tmp_path, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    assert main(["study", "--config", cfg, "--plot"]) == 0
    rows = _read_csv(tmp_path / "out" / "report.csv")
    assert len(rows) == 6
    for r in rows:
        eps, lam = float(r["epsilon"]), float(r["Lambda_m"])
        assert float(r["kappa_k"]) == pytest.approx(-2 * lam * eps, rel=1e-2)
        assert r["J_m"] == "2" and r["masked"] in ("0", "1")
        assert "e" in r["kappa_k"]
    svg = (tmp_path / "out" / "report.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<circle") == 3


def test_study_both_forms(tmp_path):
    cfg = _write(tmp_path, DILATION_CFG.replace("count = 3", "count = 2"))
    assert main(["study", "--config", cfg, "--form", "both"]) == 0
    b = _read_csv(tmp_path / "out" / "report.csv")
    v = _read_csv(tmp_path / "out" / "report_volume.csv")
    for rb, rv in zip(b, v):
        assert float(rv["kappa_k"]) == pytest.approx(float(rb["kappa_k"]), rel=3e-2)


def test_study_deterministic_across_workers(tmp_path, monkeypatch):
    cfg = _write(tmp_path, DILATION_CFG.replace("count = 3", "count = 2"))
    assert main(["study", "--config", cfg, "--workers", "1", "--output", str(tmp_path / "a")]) == 0
    monkeypatch.setenv(WORKERS_ENV, "2")
    assert main(["study", "--config", cfg, "--output", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_bad_workers_env(tmp_path, monkeypatch, capsys):
    cfg = _write(tmp_path, DILATION_CFG)
    monkeypatch.setenv(WORKERS_ENV, "many")
    assert main(["study", "--config", cfg]) == 2
    assert "workers" in capsys.readouterr().err


def test_validation_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "[solver]\ntol = -1\n")
    assert main(["eig", "--config", cfg]) == 2
    assert "tol" in capsys.readouterr().err


def test_parse_exit_code(tmp_path):
    cfg = _write(tmp_path, "[family]\nalpha2 = 0.3\n")
    assert main(["predict", "--config", cfg]) == 2


def test_missing_config_exit_code(tmp_path):
    assert main(["eig", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    text = "[family]\nclass = lipschitz\nprofile = sawtooth\n[epsilon]\nstart = 0.001\n[mesh]\nmax_vertices = 5000\n"
    cfg = _write(tmp_path, text)
    assert main(["predict", "--config", cfg]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_csv_ambiguous_rows(tmp_path):
    text = DILATION_CFG + "[cluster]\ntarget = 9.33\n[solver]\ncount = 4\n"
    cfg = _write(tmp_path, text.replace("count = 3", "count = 2"))
    assert main(["study", "--config", cfg]) == 0
    rows = _read_csv(tmp_path / "out" / "report.csv")
    assert all(r["masked"] == "1" and r["J_m"] == "0" for r in rows)
    assert math.isnan(float(rows[0]["kappa_k"]))


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
