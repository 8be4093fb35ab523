import json
import os
import subprocess
import sys

import pytest

from hjdyn import cli


def run_main(argv):
    return cli.main(argv)


def test_analyze_json_schema(capsys):
    rc = run_main(["analyze", "--system", "template:parametrized_oscillator"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["schema"] == 1
    assert report["vanishing"] == "symbolically-zero"
    assert report["integrability"]["integrable"] is True
    assert report["constraints"][0]["label"] == "H'_t"


def test_analyze_missing_file_exit_2(capsys):
    rc = run_main(["analyze", "--system", "/does/not/exist"])
    assert rc == 2


def test_analyze_contradiction_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("coordinates = q1, q2\n"
                    "lagrangian = q1dot^2/2 + q2\n")
    rc = run_main(["analyze", "--system", str(path)])
    assert rc == 1


def test_simulate_csv_shape(tmp_path):
    out = tmp_path / "traj.csv"
    rc = run_main(["simulate", "--system", "template:parametrized_oscillator",
                   "--initial", "q=1,p_q=0", "--t-span", "0:1",
                   "--dt", "1e-2", "--output", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,q,p_q,p_t,Z,constraint_residual"
    assert len(lines) == 102  # header + 101 samples


def test_simulate_free_particle_momenta_constant(tmp_path):
    out = tmp_path / "traj.csv"
    rc = run_main(["simulate", "--system", "template:relativistic_free?m=1",
                   "--initial", "p=3,0,0", "--t-span", "0:1",
                   "--dt", "1e-2", "--output", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    ip = header.index("p_1")
    vals = {row.split(",")[ip] for row in lines[1:]}
    assert vals == {"3"}


def test_simulate_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["--seed", "5", "simulate", "--system",
            "template:parametrized_oscillator", "--initial", "q=1,p_q=0",
            "--t-span", "0:1", "--dt", "1e-2"]
    run_main(argv + ["--output", str(a)])
    run_main(argv + ["--output", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_quantize_csv(tmp_path):
    out = tmp_path / "psi.csv"
    rc = run_main(["quantize", "--potential", "q^2/2",
                   "--initial", "gaussian:center=0,width=1,k=0",
                   "--grid", "64", "--steps", "10", "--snapshot-every", "5",
                   "--output", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,x,re,im"
    # initial snapshot plus two evolved ones
    assert len(lines) == 1 + 3 * 64


def test_quantize_requires_exactly_one_operator():
    assert run_main(["quantize", "--steps", "1"]) == 1
    assert run_main(["quantize", "--potential", "q^2/2",
                     "--relativistic", "m=1", "--steps", "1"]) == 1


def test_numpy_fallback_matches_jit(tmp_path):
    argv = [sys.executable, "-m", "hjdyn.cli", "simulate",
            "--system", "template:parametrized_oscillator",
            "--initial", "q=1,p_q=0", "--t-span", "0:1", "--dt", "1e-2"]
    a = subprocess.run(argv + ["--output", str(tmp_path / "a.csv")],
                       env=dict(os.environ, HJDYN_DISABLE_NUMBA="1"),
                       capture_output=True)
    b = subprocess.run(argv + ["--output", str(tmp_path / "b.csv")],
                       env={k: v for k, v in os.environ.items()
                            if k != "HJDYN_DISABLE_NUMBA"},
                       capture_output=True)
    assert a.returncode == 0 and b.returncode == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
