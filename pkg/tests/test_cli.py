import hashlib
import json
import math
import subprocess
import sys
from importlib import resources

import pytest

from dcsl.cli import EXIT_CONFIG, EXIT_NO_EXCLUSION, EXIT_NUMERIC, EXIT_OK, parse_grid, run
from dcsl.emit import parse_table


def call(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = run(list(argv) + ["--out", str(out)])
    return code, (parse_table(out.read_bytes(), "json" if name.endswith(".json") else "csv") if out.exists() else None)


def err_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_point_coefficients(tmp_path):
    code, rows = call(tmp_path, "coeffs", "--geometry", "point", "--lambda", "1e-8", "--rc", "1e-7", "--tcsl", "inf")
    assert code == EXIT_OK and len(rows) == 1
    assert rows[0]["eta_1_m2_s"] == pytest.approx(1e-8 / (2 * 1e-14), rel=1e-12)
    assert rows[0]["gamma_csl_1_s"] == 0.0


def test_pair_coefficients(tmp_path):
    code, rows = call(
        tmp_path, "coeffs", "--geometry", "sphere", "--radius-m", "1e-7", "--density-kg-m3", "2000",
        "--lambda", "1", "--rc", "1e-7", "--tcsl", "1e-3", "--separation-m", "0,0,1e-7",
    )
    assert code == EXIT_OK and 0 < rows[0]["sigma_1_m2_s"] < rows[0]["eta_1_m2_s"]


def test_exclusion_lisa(tmp_path):
    code, rows = call(tmp_path, "exclusion", "--exp", "lisa_pathfinder.json", "--tcsl", "1", "--rc-grid", "1e-8:1e-4:60log")
    assert code == EXIT_OK and len(rows) == 60
    assert rows[0]["r_C_m"] == 1e-8 and all(r["lambda_max_1_s"] > 0 for r in rows)


def test_exclusion_deterministic_across_threads(tmp_path):
    digests = set()
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}.csv"
        assert run(["exclusion", "--exp", "auriga", "--tcsl", "1e-7", "--rc-grid", "1e-8:1e-4:13log", "--threads", threads, "--out", str(out)]) == 0
        digests.add(hashlib.sha256(out.read_bytes()).hexdigest())
    assert len(digests) == 1


def test_simulate_reproducible(tmp_path):
    args = ["simulate", "--exp", "desk_resonator", "--lambda", "1e-3", "--rc", "1e-7", "--tcsl", "1",
            "--duration-s", "2.0", "--dt-s", "1e-5", "--seed", "4", "--stride", "100"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(parse_table(a.read_bytes())) == 2001


def test_spectrum_temperature_and_validity(tmp_path):
    code, rows = call(tmp_path, "spectrum", "--exp", "cantilever", "--lambda", "1e-8", "--rc", "1e-7", "--omega-grid", "5e4:6e4:11lin")
    assert code == 0 and len(rows) == 11 and all(r["S_xx_m2_s"] > 0 for r in rows)
    code, rows = call(tmp_path, "temp-shift", "--exp", "cantilever", "--lambda", "1e-8", "--rc", "1e-7", "--tcsl", "1", "--spectral", "--format", "json", name="t.json")
    assert code == 0
    r = rows[0]
    assert r["T_spectral_K"] == pytest.approx(r["T_system_K"], rel=5e-3)
    assert r["T_system_K"] - r["delta_T_K"] == pytest.approx(1e-3, rel=1e-12)
    code, rows = call(tmp_path, "validity", "--exp", "cantilever", "--rc", "1e-10", "--tcsl", "1e-10")
    assert code == 0 and rows[0]["satisfied"] is True
    code, rows = call(tmp_path, "force-psd", "--exp", "ligo", "--lambda", "1e-6", "--rc", "1e-6", "--omega-grid", "1:1e3:4log")
    assert code == 0 and len(rows) == 4


def test_bound_and_no_exclusion(tmp_path):
    code, rows = call(tmp_path, "bound", "--exp", "auriga", "--rc", "1e-7")
    assert code == 0 and rows[0]["status"] == "bracketed-root"
    code, rows = call(tmp_path, "bound", "--exp", "ligo", "--rc", "1e-7", "--datum", "1e10")
    assert code == EXIT_NO_EXCLUSION and rows[0]["status"] == "no-exclusion-below-cap"


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == EXIT_CONFIG
    e = err_json(capsys)
    assert e["error"] == "config" and e["field"] == "subcommand"


def test_bad_values_name_field(capsys):
    assert run(["coeffs", "--geometry", "point", "--lambda", "1", "--rc", "-1"]) == EXIT_CONFIG
    assert err_json(capsys)["field"] == "rc"
    assert run(["exclusion", "--exp", "auriga", "--rc-grid", "1e-4:1e-8:3log"]) == EXIT_CONFIG
    assert err_json(capsys)["field"] == "rc-grid"
    assert run(["bound", "--exp", "missing_experiment", "--rc", "1e-7"]) == EXIT_CONFIG
    assert err_json(capsys)["error"] == "config"


def test_numerical_failure_exit(capsys, tmp_path):
    # far too coarse a step for the resonator
    code = run(["simulate", "--exp", "desk_resonator", "--lambda", "0", "--rc", "1e-7", "--duration-s", "3", "--dt-s", "1e-2", "--out", str(tmp_path / "x.csv")])
    assert code in (EXIT_CONFIG, EXIT_NUMERIC)
    assert not (tmp_path / "x.csv").exists()


def test_inputs_not_mutated(tmp_path):
    src = (resources.files("dcsl") / "catalog" / "lisa_pathfinder.json").read_bytes()
    path = tmp_path / "lisa.json"
    path.write_bytes(src)
    assert run(["bound", "--exp", str(path), "--rc", "1e-7", "--datum", "3e-15", "--out", str(tmp_path / "b.csv")]) == 0
    assert path.read_bytes() == src


def test_grid_parser():
    assert list(parse_grid("1:3:3lin")) == [1.0, 2.0, 3.0]
    g = parse_grid("1e-8:1e-4:5log")
    assert g[0] == 1e-8 and g[-1] == pytest.approx(1e-4) and len(g) == 5
    for bad in ("1:2", "0:1:3log", "2:1:3lin", "a:b:3lin"):
        with pytest.raises(Exception):
            parse_grid(bad)


def test_module_entry_point_writes_stdout():
    r = subprocess.run(
        [sys.executable, "-m", "dcsl", "coeffs", "--geometry", "point", "--lambda", "1e-8", "--rc", "1e-7", "--format", "json"],
        capture_output=True, check=False,
    )
    assert r.returncode == 0 and r.stderr == b""
    rows = json.loads(r.stdout)
    assert math.isclose(rows[0]["eta_1_m2_s"], 5e5, rel_tol=1e-12)
