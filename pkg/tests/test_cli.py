import json
import subprocess
import sys

import numpy as np
import pytest

from opsys import (
    SystemMap,
    band_system,
    cb_norm,
    full_system,
    gamma_norm,
    norm_r,
    random_element,
    save_map,
    save_system,
)
from opsys.cli import main, run
from opsys.linalg import matrix_to_json


@pytest.fixture
def band_file(tmp_path):
    p = tmp_path / "band.json"
    save_system(band_system(3, 1), p)
    return p


def element_file(tmp_path, x):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"level": x.level, "matrix": matrix_to_json(x.matrix)}))
    return p


def test_zoo_report_schema(tmp_path):
    out = tmp_path / "z.json"
    assert main(["zoo", "band", "4", "1", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["schema"] == "opsys-report/1"
    assert rep["seed"] == 0 and rep["pass"] is True
    assert rep["result"]["dim"] == 10
    # the report itself loads as a system
    assert main(["sys", "info", str(out), "--levels", "1", "--samples", "1",
                 "-o", str(tmp_path / "i.json")]) == 0


def test_tolerance_from_csv(tmp_path):
    csv = tmp_path / "m.csv"
    csv.write_text("coords\n0\n1\n2\n")
    code, rep = run(["zoo", "tolerance", str(csv), "--eps", "1.5", "-o", str(tmp_path / "t.json")])
    assert code == 0 and rep["result"]["dim"] == 7


def test_usage_and_input_errors(tmp_path, capsys):
    assert main(["zoo", "band", "4"]) == 1
    assert main(["norm", "r", str(tmp_path / "missing.json"), "x.json"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("coords\n0,0\n1,oops\n")
    assert main(["zoo", "tolerance", str(bad), "--eps", "1"]) == 1
    assert "line 3" in capsys.readouterr().err


def test_map_dual_rejects_non_ccp(tmp_path):
    S = full_system(2)
    save_map(SystemMap.from_function(S, lambda b: 2 * b.T), tmp_path / "t.json")
    assert main(["map", "dual", str(tmp_path / "t.json"), "-o", str(tmp_path / "o.json")]) == 1
    code, rep = run(["dual", "build", str(tmp_path / "missing.json")])
    assert code == 1 and rep is None


def lambda_max_file(tmp_path):
    problem = {"num_vars": 1, "objective": [1.0],
               "blocks": [[matrix_to_json(-np.diag([1.0, 3.0])), matrix_to_json(np.eye(2))]],
               "equalities": []}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(problem))
    return path


def test_failed_verdict_exits_two(tmp_path):
    code, rep = run(["sdp", "solve", str(lambda_max_file(tmp_path)), "--max-iters", "1",
                     "-o", str(tmp_path / "s.json")])
    assert code == 2 and rep["pass"] is False
    assert json.loads((tmp_path / "s.json").read_text())["pass"] is False


def test_library_values_equal_cli_values(tmp_path, band_file, rng):
    S = band_system(3, 1)
    x = random_element(S, rng, 2)
    xf = element_file(tmp_path, x)
    _, rep = run(["norm", "r", str(band_file), str(xf), "-o", str(tmp_path / "r.json")])
    assert rep["result"]["norm_r"] == norm_r(S, x).value
    _, rep = run(["norm", "gamma", str(band_file), str(xf), "-o", str(tmp_path / "g.json")])
    assert rep["result"]["gamma"] == gamma_norm(S, x).value
    _, rep = run(["norm", "op", str(band_file), str(xf), "-o", str(tmp_path / "o.json")])
    assert rep["result"]["norm"] == x.norm()
    phi = SystemMap.from_function(S, lambda b: b[:2, :2])
    save_map(phi, tmp_path / "p.json")
    _, rep = run(["map", "cb", str(tmp_path / "p.json"), "-o", str(tmp_path / "c.json")])
    assert rep["result"]["cb_norm"] == cb_norm(phi).value


def test_member_and_cp(tmp_path, band_file):
    S = band_system(3, 1)
    xf = element_file(tmp_path, S.element(np.eye(3), 1))
    _, rep = run(["sys", "member", str(band_file), str(xf), "-o", str(tmp_path / "m.json")])
    assert rep["result"]["in_cone"] is True
    save_map(SystemMap.from_function(full_system(2), lambda b: b.T), tmp_path / "t.json")
    code, rep = run(["map", "cp", str(tmp_path / "t.json"), "-o", str(tmp_path / "c.json")])
    assert code == 0 and rep["result"]["cp"] is False and rep["result"]["witness"]


def test_sdp_solve(tmp_path):
    code, rep = run(["sdp", "solve", str(lambda_max_file(tmp_path)), "-o", str(tmp_path / "s.json")])
    assert code == 0
    assert rep["result"]["solution"]["status"] == "Optimal"
    assert rep["result"]["solution"]["primal_objective"] == pytest.approx(3.0, abs=1e-7)


def test_dual_build_on_degenerate(tmp_path):
    main(["zoo", "diagzero", "2", "-o", str(tmp_path / "d.json")])
    code, rep = run(["dual", "build", str(tmp_path / "d.json"), "-o", str(tmp_path / "o.json")])
    assert code == 0 and rep["result"]["dual"]["degenerate"] is True


def test_double_run_is_byte_identical(tmp_path, band_file):
    args = ["-m", "opsys.cli", "verify", "norms", str(band_file), "--levels", "2",
            "--samples", "2", "--seed", "11"]
    outs = []
    for tag in ("a", "b"):
        path = tmp_path / f"{tag}.json"
        proc = subprocess.run([sys.executable, *args, "-o", str(path)], capture_output=True,
                              timeout=600)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["seed"] == 11
