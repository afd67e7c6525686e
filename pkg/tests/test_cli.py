import json
import subprocess
import sys

import pytest

from arw.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_stabilize_json(capsys):
    code, out, _ = run(["stabilize", "--radius", "2", "--lam", "1", "--mu", "0.8", "--seed", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["meta"]["seed"] == 3
    assert doc["result"]["halt_reason"] == "stable"
    assert set(doc["result"]["M"]) == {str(v) for v in range(5)}


def test_stabilize_without_particles(capsys):
    code, out, _ = run(["stabilize", "--mu", "0"], capsys)
    assert code == 0
    assert set(json.loads(out)["result"]["M"].values()) == {0}


def test_stabilize_relevant_and_capped(capsys):
    code, out, _ = run(["stabilize", "--relevant", "--cap", "1", "--mu", "1.5"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["m"] is None and max(res["M"].values()) <= 1


def test_essential_scan_csv(capsys):
    code, out, _ = run(["essential-scan", "--instances", "5", "--mu", "1.0", "--seed", "2"], capsys)
    assert code == 0
    body = csv_body(out)
    assert body[0] == "instance,vertex,index,s_essential,p_essential,gap_positive,M"
    assert len(body) > 1


def test_russo_check(capsys):
    code, out, _ = run(["russo-check", "--event", "path-pair", "--lam", "0.5,2", "--mu", "0.3,0.7"], capsys)
    assert code == 0
    reports = json.loads(out)["reports"]
    assert len(reports) == 4 and all(r["pass"] for r in reports)


def test_diff_ineq(capsys):
    code, out, _ = run(["diff-ineq", "--event", "one-site", "--lam", "1", "--mu", "0.9"], capsys)
    assert code == 0 and json.loads(out)["checks"][0]["pass"]


def test_monotone_path_exact_and_mc(capsys):
    code, out, _ = run(["monotone-path", "--event", "path-pair"], capsys)
    assert code == 0 and json.loads(out)["meta"]["mode"] == "exact"
    code, out, _ = run(["monotone-path", "--p", "1,0.7", "--q", "1.2,0.8", "--L", "16", "--H", "4",
                        "--samples", "500"], capsys)
    assert code == 0 and json.loads(out)["result"]["pass"]


def test_monotone_path_rejects_point_below(capsys):
    code, _, err = run(["monotone-path", "--p", "1,0.3", "--q", "2,0.5"], capsys)
    assert code == 2 and "q:" in err


def test_critical_curve_csv(capsys):
    code, out, _ = run(["critical-curve", "--lams", "0.5,1", "--L", "16", "--H", "4", "--samples", "200"], capsys)
    assert code == 0
    body = csv_body(out)
    assert body[0] == "lam,zeta,ci_lo,ci_hi,censored,sandwich_pass,slope_pass"
    assert len(body) == 3
    assert any(line.startswith("# samples: 200") for line in out.splitlines())


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0 and all(c["pass"] for c in json.loads(out)["checks"])


def test_reproducible_output(tmp_path):
    argv = ["essential-scan", "--instances", "3", "--seed", "9", "--mu", "1.0"]
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert main(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"radius": 1, "mu": 0.9, "seed": 5}))
    code, out, _ = run(["stabilize", "--config", str(cfg), "--seed", "6"], capsys)
    assert code == 0
    meta = json.loads(out)["meta"]
    assert meta["radius"] == 1 and meta["mu"] == 0.9 and meta["seed"] == 6


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"radios": 1}))
    code, _, err = run(["stabilize", "--config", str(cfg)], capsys)
    assert code == 2 and "config.radios" in err


@pytest.mark.parametrize("argv", [
    ["stabilize", "--law", "bernoulli", "--mu", "1.2"],
    ["stabilize", "--budget", "0"],
    ["stabilize", "--topology", "hexagon"],
    ["russo-check", "--event", "nope"],
])
def test_invalid_input_exit_code(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "arw", "stabilize", "--mu", "0"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["halt_reason"] == "stable"
