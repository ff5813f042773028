import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from stochdp.cli import main, run
from stochdp.integrand import expected_objective
from stochdp.serialization import load_instance, load_schema, parse_rational, policy_from_json

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
RESULT_SCHEMA = load_schema("result")


def result(command, name, **kw):
    code, doc = run(command, str(INSTANCES / name), **kw)
    jsonschema.validate(doc, RESULT_SCHEMA)
    return code, doc


def test_trivial_solve():
    code, doc = result("solve", "trivial.json")
    assert code == 0
    assert doc["value"]["exact"] == "0/1"


def test_superhedge_binomial_call():
    code, doc = result("superhedge", "binomial_call.json", check_level="full")
    assert code == 0
    assert doc["value"]["exact"] == "1/1"
    assert doc["policy"]["0"] == ["1/1", "1/2"]
    assert doc["checks"]["recession_commutation"]["ok"]


def test_check_linearity_on_arbitrage_market():
    code, doc = result("check-linearity", "arbitrage.json")
    assert code == 2
    assert doc["error"]["type"] == "LinearityViolated"
    assert doc["error"]["witness"]


def test_no_arbitrage_witness_has_nonnegative_gains():
    code, doc = result("no-arbitrage", "arbitrage.json")
    assert code == 2
    gains = [parse_rational(g) for g in doc["error"]["gains"].values()]
    assert min(gains) >= 0 and max(gains) > 0
    assert result("no-arbitrage", "binomial_call.json")[0] == 0


def test_infeasible_exit_code(tmp_path):
    doc = json.loads((INSTANCES / "trivial.json").read_text())
    doc["model"]["leaves"]["0"] = {"n": 1, "ineqs": [[1, -1], [-1, -1]]}
    doc["model"].pop("lower_bounds")
    p = tmp_path / "empty.json"
    p.write_text(json.dumps(doc))
    code, out = run("solve", str(p))
    assert code == 3 and out["error"]["type"] == "Infeasible"


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(schema=2),
    lambda d: d["tree"]["nodes"][0].update(prob="0.5"),
    lambda d: d["model"].update(dims=[2]),
    lambda d: d["tree"]["nodes"].append({"id": "x", "parent": "nowhere", "prob": "1"}),
])
def test_schema_errors(tmp_path, mutate):
    doc = json.loads((INSTANCES / "trivial.json").read_text())
    mutate(doc)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, out = run("solve", str(p))
    assert code == 4 and out["error"]["type"] == "SchemaError"


def test_unreadable_instance():
    code, out = run("solve", "/nonexistent.json")
    assert code == 4


@pytest.mark.parametrize("command, name", [
    ("solve", "binomial_call.json"),
    ("bellman", "inventory.json"),
    ("consume", "consumption.json"),
])
def test_reported_policy_reproduces_value(command, name):
    code, doc = result(command, name)
    assert code == 0
    inst = load_instance(INSTANCES / name)
    pol = policy_from_json(doc["policy"])
    spec = inst.integrand()
    assert expected_objective(inst.tree, spec, pol) == parse_rational(doc["value"]["exact"])


def test_oracle_compare_agrees():
    for name in ("binomial_call.json", "inventory.json", "trinomial_hedge.json"):
        code, doc = result("oracle-compare", name)
        assert code == 0 and doc["checks"]["agree"]
        assert doc["discrepancy"]["exact"] == "0/1"


def test_varhedge_and_dual_commands():
    code, doc = result("varhedge", "binomial_hedge.json", check_level="full")
    assert doc["value"]["exact"] == "0/1" and doc["checks"]["least_squares"]["ok"]
    code, doc = result("duality-gap", "consumption.json")
    assert code == 0 and doc["gap"]["exact"] == "0/1" and doc["checks"]["weak_duality"]
    code, doc = result("dual", "consumption.json", dual_index="displayed")
    assert code == 0 and doc["dual_index"] == "displayed"


def test_phi_probe_command():
    code, doc = result("phi-probe", "consumption.json")
    checks = doc["checks"]
    assert code == 0
    assert checks["convex"] and checks["attained"] and checks["fenchel_inequality"]
    assert checks["fenchel_tight_at_center"]
    assert len(doc["points"]) == 5


def test_output_is_deterministic(tmp_path):
    outs = []
    for k in range(2):
        p = tmp_path / f"out{k}.json"
        assert main(["superhedge", "--instance", str(INSTANCES / "binomial_call.json"),
                     "--out", str(p)]) == 0
        doc = json.loads(p.read_text())
        doc.pop("timing")
        outs.append(json.dumps(doc, sort_keys=True))
    assert outs[0] == outs[1]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stochdp.cli", "solve", "--instance",
                           str(INSTANCES / "trivial.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"]["exact"] == "0/1"
