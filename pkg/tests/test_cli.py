import csv
import io
import json
import math

import pytest

from spathermo.cli import CSV_COLUMNS, SCHEMA, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_solve_two_level(capsys):
    code, doc = run_json(capsys, "solve", "--spectrum", "0,1", "--alpha", "1", "--family", "identity",
                         "--constraint", "linear", "--U", "0.3333333333")
    assert code == 0 and doc["schema"] == SCHEMA and doc["ok"]
    assert doc["state"]["beta_renyi"] == pytest.approx(0.693147, abs=1e-6)
    assert doc["state"]["conditions"]["lsr_ok"] is True


def test_solve_degenerate(capsys):
    code, doc = run_json(capsys, "solve", "--spectrum", "0,1", "--U", "0.5")
    assert code == 0 and doc["state"]["degenerate"] is True
    assert doc["state"]["F_renyi"] is None
    assert "degenerate" in doc["state"]["null_reasons"]["F_renyi"]


def test_solve_infeasible(capsys):
    code, doc = run_json(capsys, "solve", "--spectrum", "0,1", "--U", "1.5")
    assert code == 3
    assert doc["ok"] is False and doc["error"]["code"] == "infeasible_U"


def test_solve_domain_violation(capsys):
    code, doc = run_json(capsys, "solve", "--spectrum", "0,1,2", "--family", "supra", "--alpha", "0.5",
                         "--r", "2", "--U", "0.95")
    assert code == 4 and doc["error"]["code"] == "domain"


def test_usage_errors(capsys):
    assert run(capsys, "solve", "--spectrum", "0,1", "--U", "0.3", "--family", "hq")[0] == 2
    assert run(capsys, "solve", "--spectrum", "0,1", "--U", "0.3", "--tol", "nonsense=1")[0] == 2
    assert run(capsys, "solve", "--U", "0.3")[0] == 2


def test_solve_with_oracle_and_tol(capsys):
    code, doc = run_json(capsys, "solve", "--spectrum", "0,1,2", "--alpha", "2", "--constraint", "escort",
                         "--U", "0.6", "--oracle", "--tol", "root_tol=1e-13")
    assert code == 0 and doc["oracle"]["total_variation"] < 1e-6


def test_spectrum_file(tmp_path, capsys):
    f = tmp_path / "levels.txt"
    f.write_text("# levels\n0\n1.0\n\n2.5\n")
    code, doc = run_json(capsys, "solve", "--spectrum-file", str(f), "--U", "1.0", "--alpha", "1.5")
    assert code == 0 and doc["state"]["spectrum"] == [0, 1, 2.5]


def test_json_is_bit_faithful(capsys):
    from spathermo import EntropySpec, potentials, solve
    _, doc = run_json(capsys, "solve", "--spectrum", "0,0.3,1.7", "--U", "0.4", "--alpha", "2",
                      "--family", "hq", "--q", "0.7")
    st = potentials(solve([0, 0.3, 1.7], 0.4, 2.0, "linear"), EntropySpec(2.0))
    assert doc["state"]["R_hat"] == st.R_hat
    assert doc["state"]["beta_renyi"] == st.beta_renyi


def test_out_file(tmp_path, capsys):
    out = tmp_path / "state.json"
    code, text = run(capsys, "solve", "--spectrum", "0,1", "--U", "0.2", "--out", str(out))
    assert code == 0 and text == ""
    assert json.loads(out.read_text())["schema"] == SCHEMA


def _sweep(capsys, *extra):
    code, out = run(capsys, "sweep", "--spectrum", "0,1", *extra)
    assert code == 0
    return list(csv.DictReader(io.StringIO(out)))


def test_sweep_two_level_shannon(capsys):
    rows = _sweep(capsys, "--U-range", "0.05:0.95:0.05")
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    Us = [float(r["U"]) for r in rows]
    assert Us == sorted(Us)
    betas = [float(r["beta_renyi"]) for r in rows]
    below = [b for U, b in zip(Us, betas) if U < 0.5]
    assert all(a > b for a, b in zip(below, below[1:]))
    mid = [r for r in rows if abs(float(r["U"]) - 0.5) < 1e-12][0]
    assert float(mid["beta_renyi"]) == 0.0 and "degenerate" in mid["flags"]
    for r in rows:
        for a, b in (("beta_renyi", "beta_spa"), ("lnZ_renyi", "lnZ_spa"), ("C_renyi", "C_spa")):
            assert r[a] == r[b]


def test_sweep_row_errors_continue(capsys):
    code, out = run(capsys, "sweep", "--spectrum", "0,1,2", "--family", "supra", "--alpha", "0.5", "--r", "2",
                    "--U-range", "0.1:1.0:0.1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    flags = [r["flags"] for r in rows]
    assert any(f.startswith("error:domain") for f in flags)
    assert any(not f.startswith("error") for f in flags)


def test_sweep_deterministic(capsys):
    a = run(capsys, "sweep", "--spectrum", "0,0.4,2", "--alpha", "1.5", "--U-range", "0.2:1.8:0.4")
    b = run(capsys, "sweep", "--spectrum", "0,0.4,2", "--alpha", "1.5", "--U-range", "0.2:1.8:0.4")
    assert a == b


def test_sweep_json_has_no_nan(capsys):
    code, out = run(capsys, "sweep", "--spectrum", "0,1", "--U-range", "0.25:0.75:0.25", "--format", "json")
    assert code == 0
    assert "NaN" not in out and "Infinity" not in out
    doc = json.loads(out)
    assert len(doc["rows"]) == 3


def test_verify_hq_q_one(capsys):
    code, doc = run_json(capsys, "verify", "--family", "hq", "--q", "1", "--alpha", "2", "--size", "2",
                         "--format", "json")
    assert code == 0 and doc["ok"]
    names = {c["name"]: c for c in doc["checks"]}
    sm = [c for n, c in names.items() if n.startswith("reduction: SM equals Renyi")]
    assert sm and all(c["worst"] <= 1e-12 for c in sm)


def test_verify_supra_r_alpha(capsys):
    code, out = run(capsys, "verify", "--family", "supra", "--alpha", "2", "--r", "2", "--size", "2")
    assert code == 0
    assert "PASS  reduction: SE equals Renyi (alpha=r=2.0)" in out


def test_verify_mutation_fails(capsys):
    code, out = run(capsys, "verify", "--family", "hq", "--q", "0.7", "--size", "2", "--mutate", "rspa.C")
    assert code == 1 and "FAIL" in out
