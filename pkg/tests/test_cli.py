import json
import subprocess
import sys

import pytest

from typicality import cli
from typicality.scenarios import exit_code, load_config, shipped_configs

SHIPPED = shipped_configs()


def run(*argv):
    return cli.main(list(argv))


# --------------------------------------------------------------------------
# end-to-end harness: every shipped scenario honours the exit-code contract


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_scenario_exit_codes(name, tmp_path, capsys):
    expect = SHIPPED[name].get("expect", "pass")
    code = run("run", name, "--out", str(tmp_path))
    line = capsys.readouterr().out
    assert code == (0 if expect == "pass" else 2), line
    # scoring inverts expected failures that were detected
    verdict = "pass" if code == 0 else "fail"
    assert exit_code(verdict, expect, score=True) == 0
    rec = json.loads((tmp_path / f"{name}.report.json").read_text())
    assert rec["verdict"] == verdict
    assert (tmp_path / f"{name}.cells.csv").exists()
    if rec["mode"] == "mc":
        assert (tmp_path / f"{name}.ecdf.csv").exists() and (tmp_path / f"{name}.hist.csv").exists()


def test_exit_code_contract():
    assert exit_code("pass") == 0
    assert exit_code("fail") == 2
    assert exit_code("inconclusive") == 3
    assert exit_code("fail", "fail", score=True) == 0
    assert exit_code("pass", "fail", score=True) == 2
    assert exit_code("inconclusive", "fail", score=True) == 3
    assert cli._combine([0, 3, 2]) == 2 and cli._combine([0, 3]) == 3 and cli._combine([2, 1]) == 1


def test_z3_exact_palm_report(tmp_path, capsys):
    assert run("run", "z3-exact-palm", "--out", str(tmp_path)) == 0
    rec = json.loads((tmp_path / "z3-exact-palm.report.json").read_text())
    assert len(rec["cells"]) == 7
    assert max(c["statistic"] for c in rec["cells"]) <= 1e-12


def test_nearest_point_negative_scored(capsys):
    assert run("run", "nearest-point-negative", "--n", "2000", "--score") == 0
    assert run("run", "nearest-point-negative", "--n", "2000") == 2


# --------------------------------------------------------------------------
# malformed input


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def base_config():
    return json.loads(json.dumps(load_config("circle-poisson-tn")))


@pytest.mark.parametrize("mutate", [
    lambda c: c.pop("seed"),
    lambda c: c.update(schema="other/9"),
    lambda c: c.update(rules=["no_such_rule"]),
    lambda c: c.update(functionals=["no_such_functional"]),
    lambda c: c.update(process={"sampler": "no_such_sampler"}),
    lambda c: c.update(mode="sometimes"),
    lambda c: c.pop("suite"),
], ids=["no-seed", "schema", "rule", "functional", "sampler", "mode", "suite"])
def test_malformed_config_exits_one(mutate, tmp_path, capsys):
    cfg = base_config()
    mutate(cfg)
    cfg["n"] = 50
    assert run("run", write(tmp_path, cfg)) == 1
    assert "error" in capsys.readouterr().err


def test_broken_json_and_unknown_name(tmp_path, capsys):
    assert run("run", write(tmp_path, "{not json")) == 1
    assert run("run", "no-such-scenario") == 1
    assert run("run", str(tmp_path / "missing.json")) == 1


def test_config_file_runs(tmp_path, capsys):
    cfg = base_config()
    cfg["n"] = 300
    assert run("run", write(tmp_path, cfg), "--seed", "3") == 0


# --------------------------------------------------------------------------
# introspection


def test_list_scenarios(capsys):
    rows = cli.list_scenarios()
    assert len(rows) >= 12
    assert {"z3-exact-palm", "nearest-point-negative"} <= {r["name"] for r in rows}
    assert run("list") == 0
    assert "z3-exact-palm" in capsys.readouterr().out


def test_describe(capsys):
    text = cli.describe("thm-2.4")
    assert "Eq. (2.1)" in text and "z3-exact-palm" in text
    with pytest.raises(KeyError):
        cli.describe("bogus")
    assert run("describe", "bogus") == 1
    assert run("describe", "ex-4.1") == 0
    assert "nearest-point-negative" in capsys.readouterr().out


def test_every_scenario_claim_is_described():
    for name, cfg in SHIPPED.items():
        assert name in cli.describe(cfg["claim"])


# --------------------------------------------------------------------------
# determinism


@pytest.mark.parametrize("args", [
    ["s3-exact-palm"],
    ["circle-poisson-tn", "--n", "400"],
    ["tree-reverse-pair", "--n", "150"],
])
def test_reruns_are_byte_identical(args, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run("run", *args, "--out", str(a))
    run("run", *args, "--out", str(b))
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_seed_override_changes_mc_output(tmp_path, capsys):
    run("run", "circle-poisson-tn", "--n", "300", "--out", str(tmp_path / "a"))
    run("run", "circle-poisson-tn", "--n", "300", "--seed", "99", "--out", str(tmp_path / "b"))
    a = json.loads((tmp_path / "a" / "circle-poisson-tn.report.json").read_text())
    b = json.loads((tmp_path / "b" / "circle-poisson-tn.report.json").read_text())
    assert a["seed"] != b["seed"] and a["cells"] != b["cells"]


def test_parallel_jobs_match_serial(tmp_path, capsys):
    names = ["z3-exact-palm", "z3-wrong-mixture", "kernel-z4-stationary"]
    assert run("run", *names, "--out", str(tmp_path / "s")) == 2
    assert run("run", *names, "--jobs", "2", "--out", str(tmp_path / "p")) == 2
    for n in names:
        f = f"{n}.report.json"
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "p" / f).read_bytes()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "typicality", "describe", "thm-2.4"], capture_output=True, text=True)
    assert r.returncode == 0 and "Eq. (2.1)" in r.stdout
