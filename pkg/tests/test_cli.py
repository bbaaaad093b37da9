import json
import subprocess
import sys

import pytest

from projcap import __version__
from projcap.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def strip_time(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return doc


def test_kernel_json(capsys):
    code, out, _ = run(["kernel", "--p", '{"re": [1, 0], "im": [0, 0]}', "--q", "1,1"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["version"] == __version__ and "timestamp" in doc and doc["config"]["command"] == "kernel"
    assert doc["result"]["pairs"][0]["sigma"] == pytest.approx(2**-0.5)


def test_negative_radius_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["capacity", "--set", "ball", "--center", "1,0", "--radius", "-1"])
    assert exc.value.code == 2
    assert "--radius" in capsys.readouterr().err


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fekete", "--s", "3", "--frobnicate"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["fekete"],
    ["fekete", "--s-list", "4,3"],
    ["capacity", "--set", "ball", "--radius", "0.3"],
    ["capacity", "--set", "finite"],
    ["evans", "--set", "p1"],
])
def test_missing_or_bad_arguments(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_capacity_rerun_identical(tmp_path, capsys):
    argv = ["capacity", "--set", "p1", "--m", "100", "--seed", "3"]
    a = run(argv + ["--out", str(tmp_path / "a.json")], capsys)
    b = run(argv + ["--out", str(tmp_path / "b.json")], capsys)
    assert a[0] == b[0] == 0
    da = strip_time((tmp_path / "a.json").read_text())
    db = strip_time((tmp_path / "b.json").read_text())
    assert da == db
    for key in ("gamma_hat", "kappa_hat", "fw_gap", "m", "diag_rule", "cross_gap"):
        assert key in da["result"]


def test_capacity_nonconvergence_exit_1(capsys):
    code, _, err = run(["capacity", "--set", "p1", "--m", "100", "--tol", "1e-300"], capsys)
    assert code == 1 and "numeric failure" in err


def test_fekete_csv(capsys):
    code, out, _ = run(["fekete", "--set", "p1", "--s-list", "2,3", "--format", "csv"], capsys)
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert code == 0
    assert lines[0] == "s,theta_s,D_s,restarts,sweeps,wall_ms"
    assert lines[1].startswith("2,") and lines[2].startswith("3,")
    assert out.startswith("# config:")


def test_points_file_and_evans(tmp_path, capsys):
    pts = tmp_path / "pts.json"
    pts.write_text(json.dumps([{"re": [1, 0], "im": [0, 0]}, {"re": [0, 1], "im": [0, 0]}]))
    code, out, _ = run(["evans", "--set", "finite", "--points-file", str(pts), "--H", "3"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert set(doc["result"]) == {"measure", "certificate"}
    assert [lv["s_h"] for lv in doc["result"]["certificate"]["levels"]] == [2, 2, 2]


def test_missing_points_file_exit_2(tmp_path, capsys):
    code, _, err = run(["fekete", "--set", "finite", "--points-file", str(tmp_path / "nope.json"), "--s", "2"],
                       capsys)
    assert code == 2


def test_energy_from_measure_file(tmp_path, capsys):
    f = tmp_path / "mu.json"
    f.write_text(json.dumps({"n": 1, "atoms": [[[1, 0], [0, 0]], [[0, 1], [0, 0]]], "weights": [0.5, 0.5]}))
    code, out, _ = run(["energy", "--measure-file", str(f)], capsys)
    doc = json.loads(out)
    assert doc["result"]["energy"]["value"] == "inf"
    assert doc["result"]["offdiag_energy"] == pytest.approx(0.0)


def test_verify_quick_subprocess():
    proc = subprocess.run([sys.executable, "-m", "projcap", "verify", "--criteria", "5"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0
    assert "criterion  5 PASS" in proc.stdout
