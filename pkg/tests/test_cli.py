import csv
import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from rmtquench import analytic as an
from rmtquench.cli import csv_bytes, main, parse_grid


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_chi_analytic_example(tmp_path):
    assert main(["chi", "--N", "5", "--beta", "0", "--t", "0:3:300", "--mode", "analytic", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "chi_N5_beta0.csv")
    assert rows[0] == ["t", "re", "im"]
    assert rows[1] == ["0", "1", "0"]
    assert len(rows) == 301
    raw = (tmp_path / "chi_N5_beta0.csv").read_bytes()
    assert raw.count(b"\r\n") == 301


def test_echo_analytic_example(tmp_path):
    assert main(["echo", "--N", "5", "--beta", "0", "--tlog", "1e-2:1e3:400", "--out", str(tmp_path)]) == 0
    data = np.array(_rows(tmp_path / "echo_N5_beta0.csv")[1:], dtype=float)
    t, L = data[:, 0], data[:, 1]
    assert L.min() < 2 / 30
    late = L[t >= 100].mean()
    assert late == pytest.approx(1 / 15, rel=0.02)


def test_mean_work_mc_example(tmp_path):
    argv = ["mean-work", "--N", "2,5", "--beta", "0:3:13", "--mode", "mc-annealed", "--pairs", "3000",
            "--seed", "7", "--out", str(tmp_path)]
    assert main(argv) == 0
    for N in (2, 5):
        rows = _rows(tmp_path / f"mean_work_N{N}.csv")
        assert rows[0] == ["beta", "mean_work", "stderr", "analytic"]
        data = np.array(rows[1:], dtype=float)
        np.testing.assert_allclose(data[:, 3], [an.mean_work(N, b) for b in data[:, 0]], rtol=1e-15)
        assert np.all(np.abs(data[:, 1] - data[:, 3]) <= 3 * data[:, 2] + 1e-12)


def test_manifest_contents(tmp_path):
    main(["sff", "--N", "4", "--beta", "0,1", "--t", "0:2:5", "--out", str(tmp_path)])
    man = json.loads((tmp_path / "sff.manifest.json").read_text())
    assert man["subcommand"] == "sff"
    assert man["params"]["N"] == "4" and man["params"]["seed"] == 7
    assert man["version"] and man["wall_clock_s"] >= 0
    assert {o["file"] for o in man["outputs"]} == {"sff_N4_beta0.csv", "sff_N4_beta1.csv"}
    for o in man["outputs"]:
        assert hashlib.sha256((tmp_path / o["file"]).read_bytes()).hexdigest() == o["sha256"]


def test_floats_round_trip_17_digits():
    x = [0.1, 1 / 3, 2.0**-1074, 1e308, -0.0]
    body = csv_bytes(["x"], [x]).decode()
    back = [float(v) for v in body.split("\r\n")[1:-1]]
    assert back == x


def test_rfc4180_quoting():
    body = csv_bytes(['a,b', 'say "hi"'], [[1.5], [2.5]]).decode()
    assert body.splitlines()[0] == '"a,b","say ""hi"""'


@pytest.mark.parametrize("argv", [
    ["chi", "--N", "x"],
    ["chi", "--t", "0:3"],
    ["chi", "--t", "0:1:3", "--tlog", "1:2:3"],
    ["chi", "--mode", "nope"],
    ["nosuch"],
    ["echo", "--N", "5", "--mode", "mc-annealed", "--pairs", "10"],
    ["sff", "--mode", "mc-exact"],
    ["chi", "--N", "3", "--mode", "mc-exact"],
    ["scramble-check", "--qubits", "3", "--t", "0:1:2", "--pairs", "200"],
    ["mean-work", "--beta", "2,1"],
])
def test_argument_errors_exit_2(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "nosuch" else argv) == 2


def test_io_error_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["chi", "--t", "0:1:3", "--out", str(blocker / "sub")]) == 3
    assert main(["echo", "--config", str(tmp_path / "missing.cfg")]) == 3


def test_validate_failure_exit_1(monkeypatch):
    from rmtquench import acceptance

    def failing(threads=None):
        r = acceptance.CriterionResult(5, "forced")
        r.add("always", False, "forced failure")
        return r

    monkeypatch.setattr(acceptance, "CRITERIA", [failing])
    assert main(["validate"]) == 1


def test_validate_subset_passes():
    assert main(["validate", "--only", "5"]) == 0


def test_replay_reproduces(tmp_path):
    out = tmp_path / "a"
    main(["echo", "--N", "3", "--beta", "1", "--tlog", "1e-1:1e2:30", "--mode", "mc-exact", "--pairs", "300",
          "--out", str(out)])
    manifest = out / "echo.manifest.json"
    assert main(["replay", str(manifest), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "echo_N3_beta1.csv").read_bytes() == (out / "echo_N3_beta1.csv").read_bytes()
    man = json.loads(manifest.read_text())
    man["outputs"][0]["sha256"] = "0" * 64
    manifest.write_text(json.dumps(man))
    assert main(["replay", str(manifest), "--out", str(tmp_path / "c")]) == 1


def test_thread_count_byte_identity(tmp_path):
    bodies = []
    for k in (1, 4, 8):
        out = tmp_path / str(k)
        main(["work-pdf", "--N", "4", "--beta", "1", "--mode", "mc-exact", "--pairs", "700", "--bins", "30",
              "--threads", str(k), "--out", str(out)])
        bodies.append((out / "work_pdf_N4_beta1.csv").read_bytes())
    assert bodies[0] == bodies[1] == bodies[2]


def test_seed_env_and_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("N = 3\nbeta = 0.5\ntlog = 1e-1:10:4\n")
    assert main(["echo", "--config", str(cfg), "--beta", "1", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "echo_N3_beta1.csv").exists()

    monkeypatch.setenv("RMT_SEED", "123")
    main(["chi", "--t", "0:1:3", "--out", str(tmp_path / "e")])
    assert json.loads((tmp_path / "e" / "chi.manifest.json").read_text())["params"]["seed"] == 123
    main(["chi", "--t", "0:1:3", "--seed", "5", "--out", str(tmp_path / "f")])
    assert json.loads((tmp_path / "f" / "chi.manifest.json").read_text())["params"]["seed"] == 5
    monkeypatch.setenv("RMT_SEED", "abc")
    assert main(["chi", "--t", "0:1:3", "--out", str(tmp_path / "g")]) == 2

    (tmp_path / "bad.cfg").write_text("colour = red\n")
    monkeypatch.delenv("RMT_SEED")
    assert main(["echo", "--config", str(tmp_path / "bad.cfg")]) == 2


def test_other_subcommands(tmp_path):
    assert main(["work-pdf", "--N", "3", "--beta", "0.5", "--W=-6:6:61", "--out", str(tmp_path / "w")]) == 0
    assert main(["replay", str(tmp_path / "w" / "work-pdf.manifest.json"), "--out", str(tmp_path / "w2")]) == 0
    assert main(["variance", "--N", "3", "--beta", "0,1", "--out", str(tmp_path)]) == 0
    assert main(["frame-potential", "--N", "3", "--t", "0:5:11", "--out", str(tmp_path)]) == 0
    assert main(["frame-potential", "--N", "3", "--t", "0:5:11", "--mode", "mc-annealed", "--pairs", "200",
                 "--window", "2:5", "--out", str(tmp_path / "fp")]) == 0
    man = json.loads((tmp_path / "fp" / "frame-potential.manifest.json").read_text())
    assert "window_mean" in man["derived"]["frame_potential_N3.csv"]
    assert main(["scramble-check", "--t", "0:2:3", "--pairs", "300", "--out", str(tmp_path / "s")]) == 0
    rows = _rows(tmp_path / "s" / "scramble_check_q1.csv")
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)


def test_gnuplot_script(tmp_path, capsys):
    main(["echo", "--N", "4", "--beta", "0,1", "--tlog", "1e-1:10:5", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["gnuplot-script", str(tmp_path / "echo.manifest.json")]) == 0
    text = capsys.readouterr().out
    assert "set logscale x" in text and "echo_N4_beta0.csv" in text and "echo_N4_beta1.csv" in text


def test_parse_grid():
    np.testing.assert_allclose(parse_grid("1e-2:1e3:6", log=True), np.geomspace(1e-2, 1e3, 6))
    assert parse_grid("0:1:1").tolist() == [0.0]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "rmtquench", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "rmtquench" in res.stdout
    res = subprocess.run([sys.executable, "-m", "rmtquench", "chi", "--bogus"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage" in res.stderr
