import json

import pytest

from lrsolve import cli
from lrsolve.checks import Check


@pytest.fixture
def tiny(tmp_path):
    f = tmp_path / "tiny.toml"
    f.write_text(
        'name = "tiny"\nt1 = 0.1\ndt_record = 0.05\nn_particular = 2\nn_max = 20\n'
        'drive.kind = "constant"\ndrive.amplitude = 0.5\n'
        "grid.n_points = 512\ngrid.half_width = 16.0\n"
    )
    return f


def test_check_algebra(tmp_path, capsys):
    assert cli.main(["check-algebra", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["overall"] and rep["cubic_witness"]["degree"] == 4
    assert "q^3" in capsys.readouterr().out


def test_solve_writes_deterministic_artifacts(tmp_path, tiny):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["solve", "--scenario", str(tiny), "--out", str(a)]) == 0
    assert cli.main(["solve", "--scenario", str(tiny), "--out", str(b)]) == 0
    csvs = sorted(p.name for p in (a / "tiny").glob("*.csv"))
    assert {"coefficients.csv", "phases.csv", "fidelities.csv", "snapshot_n0_t1.csv", "transforms.csv"} <= set(csvs)
    for name in csvs:
        assert (a / "tiny" / name).read_bytes() == (b / "tiny" / name).read_bytes()
    rep = json.loads((a / "report.json").read_text())
    names = [c["name"] for r in rep["reports"] for c in r["checks"]]
    assert len(names) == len(set(names)) and rep["overall"]
    assert rep["reports"][0]["scenario"]["name"] == "tiny"
    assert rep["reports"][0]["versions"]["numpy"]


def test_tol_scale_can_fail_a_run(tmp_path, tiny):
    assert cli.main(["solve", "--scenario", str(tiny), "--out", str(tmp_path), "--tol-scale", "1e-12"]) == 1


def test_config_errors(tmp_path, tiny):
    assert cli.main(["solve", "--scenario", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "b"\nmas = 1.0\n')
    assert cli.main(["solve", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    harm = tmp_path / "h.toml"
    harm.write_text('name = "h"\nomega.kind = "constant"\nomega.amplitude = 1.0\n')
    assert cli.main(["volkov", "--scenario", str(harm), "--out", str(tmp_path)]) == 2
    hyper = tmp_path / "hyp.toml"
    hyper.write_text('name = "y"\nt1 = 0.1\nquad_seed.qp = 2.0\n')
    assert cli.main(["solve", "--scenario", str(hyper), "--out", str(tmp_path)]) == 2
    assert cli.main(["solve", "--scenario", str(tiny), "--out", str(tmp_path), "--tol-scale", "0"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_volkov_and_merge(tmp_path, tiny):
    assert cli.main(["volkov", "--scenario", str(tiny), "--k", "0", "--k", "2.5", "--out", str(tmp_path / "v")]) == 0
    rows = (tmp_path / "v" / "tiny" / "volkov.csv").read_text().splitlines()
    assert rows[0] == "t,k,eigen_residual,tdse_residual" and len(rows) == 11
    assert cli.main(["check-algebra", "--out", str(tmp_path / "a")]) == 0
    merged = tmp_path / "m.json"
    assert cli.main(["report-merge", str(tmp_path / "v" / "report.json"), str(tmp_path / "a" / "report.json"), "--out", str(merged)]) == 0
    rep = json.loads(merged.read_text())
    assert rep["overall"] and [r["command"] for r in rep["reports"]] == ["volkov", "check-algebra"]


def test_parallel_jobs(tmp_path, tiny):
    other = tmp_path / "tiny2.toml"
    other.write_text(tiny.read_text().replace('"tiny"', '"tiny2"'))
    assert cli.main(["volkov", "--scenario", str(tiny), "--scenario", str(other), "--jobs", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "tiny2" / "volkov.csv").exists()


def test_report_rejects_duplicate_checks():
    with pytest.raises(RuntimeError):
        cli.build_report("x", [Check("a", 0, 1), Check("a", 0, 1)])


def test_merge_flattens():
    r = {"overall": True, "checks": []}
    assert cli.merge_reports([cli.merge_reports([r, r]), r])["reports"] == [r, r, r]
    assert not cli.merge_reports([r, {"overall": False}])["overall"]


def test_oracle_only(tmp_path, tiny):
    assert cli.main(["oracle-only", "--scenario", str(tiny), "--out", str(tmp_path)]) == 0
    head = (tmp_path / "tiny" / "moments.csv").read_text().splitlines()[0]
    assert head == "t,norm,q_mean,p_mean,q_var,energy"
    rep = json.loads((tmp_path / "report.json").read_text())
    assert any(c["name"] == "oracle.order_low" for c in rep["reports"][0]["checks"])


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "lrsolve", "check-algebra", "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "overall: PASS" in out.stdout
