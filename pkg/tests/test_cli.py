from __future__ import annotations

import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from levy_nfl.cli import ERROR, FREE_LUNCH, OK, main
from levy_nfl.io import SPEC_SCHEMA, fixture_names, fixture_path, load_fixture, parse_spec, to_jsonable
from levy_nfl.errors import SchemaError

ANALYZE = {
    "bsm": OK,
    "bsm1d": OK,
    "bsm2d": OK,
    "paper_1d": OK,
    "paper_1d_infinite": FREE_LUNCH,
    "loginfinite": OK,
    "monotone_poisson": FREE_LUNCH,
    "decreasing_poisson": FREE_LUNCH,
    "two_sided": OK,
    "diffusive": OK,
    "parabola": FREE_LUNCH,
    "remark_esmm_not_emm": OK,
    "ih_positive_drift_orthant": FREE_LUNCH,
    "ih_negative_drift_orthant": OK,
    "ih_martingale": OK,
    "ih_remark": OK,
    "ih_heavy_tail": FREE_LUNCH,
    "complete_single_atom": OK,
    "incomplete_two_atoms": OK,
}
IAO = {"monotone_poisson", "decreasing_poisson"}


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_fixture_table_is_complete():
    assert set(fixture_names()) == set(ANALYZE)


@pytest.mark.parametrize("name", sorted(ANALYZE))
def test_fixture_validates_against_schema(name):
    obj = json.loads(fixture_path(name).read_text())
    jsonschema.validate(obj, SPEC_SCHEMA)
    spec = load_fixture(name)
    assert spec.comment


@pytest.mark.parametrize("name", sorted(ANALYZE))
def test_analyze(name, capsys):
    rc, out, _ = run(capsys, "analyze", fixture_path(name), "--json")
    assert rc == ANALYZE[name]
    js = json.loads(out)
    assert js["certificate"]["recessionCone"]["verdict"] == ("found" if name in IAO else "empty")


@pytest.mark.parametrize("name", sorted(ANALYZE))
def test_numeraire(name, capsys):
    rc, out, err = run(capsys, "numeraire", fixture_path(name), "--json")
    js = json.loads(out)
    if name in IAO:
        assert rc == FREE_LUNCH and js["numeraire"] is None
    else:
        assert rc == OK, err
        assert js["kktResidual"] <= 1e-6


@pytest.mark.parametrize("name", sorted(ANALYZE))
def test_esscher(name, capsys):
    rc, out, err = run(capsys, "esscher", fixture_path(name), "--json")
    js = json.loads(out)
    if name in IAO or name == "parabola":
        assert rc == FREE_LUNCH and js["esmm"] is None
    else:
        assert rc == OK, err
        assert js["isESMM"]


@pytest.mark.parametrize("name", sorted(ANALYZE))
def test_complete(name, capsys):
    rc, out, err = run(capsys, "complete", fixture_path(name), "--json")
    spec = load_fixture(name)
    if type(spec.constraints).__name__ != "FullSpace":
        assert rc == ERROR and "unconstrained" in err
        return
    assert rc == OK
    js = json.loads(out)
    expected = {"complete_single_atom": True, "incomplete_two_atoms": False, "bsm1d": True}
    if name in expected:
        assert js["complete"] is expected[name]
    if name == "incomplete_two_atoms":
        assert js["reason"] == "tooManyJumpPoints"


def test_text_output(capsys):
    rc, out, _ = run(capsys, "numeraire", fixture_path("paper_1d"))
    assert rc == OK and "rho" in out and "kkt residual" in out
    rc, out, _ = run(capsys, "esscher", fixture_path("remark_esmm_not_emm"))
    assert "ESMM yes, EMM no" in out
    rc, out, _ = run(capsys, "analyze", fixture_path("monotone_poisson"))
    assert "immediate arbitrage xi = [1.0]" in out


def test_simulate_supermartingale_with_csv(tmp_path, capsys):
    path = tmp_path / "ratio.csv"
    rc, out, _ = run(capsys, "simulate", fixture_path("paper_1d"), "--paths", 5000, "--csv", path, "--json")
    assert rc == OK
    js = json.loads(out)
    assert js["reports"][0]["verdict"] == "consistent"
    rows = list(csv.reader(path.open()))
    assert rows[0][0] == "path" and len(rows) == 5001


def test_simulate_iao_demo(capsys):
    rc, out, _ = run(capsys, "simulate", fixture_path("monotone_poisson"), "--what", "iao-demo", "--paths", 2000)
    assert rc == FREE_LUNCH and "monotone fraction = 1.0" in out
    rc, _, err = run(capsys, "simulate", fixture_path("two_sided"), "--what", "iao-demo", "--paths", 100)
    assert rc == ERROR and "no immediate arbitrage" in err


def test_simulate_infinite_horizon(capsys):
    rc, out, _ = run(capsys, "simulate", fixture_path("paper_1d_infinite"), "--what", "infinite-horizon", "--paths", 500, "--json")
    assert rc == FREE_LUNCH
    assert json.loads(out)["estimate"] >= 0.99
    rc, _, err = run(capsys, "simulate", fixture_path("ih_remark"), "--what", "infinite-horizon", "--paths", 100)
    assert rc == ERROR and "supermartingale measure" in err


def test_simulate_infinite_horizon_cap(tmp_path, capsys):
    obj = json.loads(fixture_path("ih_positive_drift_orthant").read_text())
    obj["options"] = {"maxHorizon": 1.0}
    p = tmp_path / "capped.json"
    p.write_text(json.dumps(obj))
    rc, out, _ = run(capsys, "simulate", p, "--what", "infinite-horizon", "--paths", 200)
    assert rc == ERROR and "horizon cap" in out


def test_simulate_esscher_martingale(capsys):
    rc, out, _ = run(capsys, "simulate", fixture_path("bsm"), "--what", "esscher-martingale", "--paths", 20_000)
    assert rc == OK and "consistent" in out


def test_seed_reproducible(capsys):
    args = ("simulate", fixture_path("diffusive"), "--paths", 3000, "--seed", 5, "--json")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("{bad", "malformed JSON"),
        ('{"schemaVersion": "1.0", "market": {"dimension": 1, "b": [0], "c": [[0]]}, "extra": 1}', "Additional properties"),
        ('{"schemaVersion": "2.0", "market": {"dimension": 1, "b": [0], "c": [[0]]}}', "schemaVersion"),
        ('{"schemaVersion": "1.0", "market": {"dimension": 1, "b": [0], "c": [[-1]]}}', "error"),
        ('{"schemaVersion": "1.0", "market": {"dimension": 1, "b": [0], "c": [[0]]}, "horizon": {"finite": -1}}', "horizon"),
    ],
)
def test_bad_input_exits_one(tmp_path, capsys, text, fragment):
    p = tmp_path / "bad.json"
    p.write_text(text)
    rc, _, err = run(capsys, "analyze", p)
    assert rc == ERROR and fragment in err


def test_missing_file(capsys):
    rc, _, err = run(capsys, "analyze", "/nonexistent/spec.json")
    assert rc == ERROR and err.startswith("error:")


def test_parse_spec_defaults():
    spec = parse_spec({"schemaVersion": "1.0", "market": {"dimension": 2, "b": [0.1, 0.0], "c": [[0.04, 0], [0, 0.04]]}})
    assert spec.horizon == 1.0 and spec.constraints.dim == 2 and spec.options == {}
    with pytest.raises(SchemaError):
        parse_spec(
            {
                "schemaVersion": "1.0",
                "market": {"dimension": 1, "b": [0.1], "c": [[0.04]]},
                "constraints": {"type": "orthant", "params": {"dimension": 2}},
            }
        )


def test_to_jsonable():
    assert to_jsonable({"a": [float("inf"), -float("inf"), 1.0]}) == {"a": ["inf", "-inf", 1.0]}


def test_market_json_round_trip():
    for name in fixture_names():
        spec = load_fixture(name)
        again = parse_spec({"schemaVersion": "1.0", "market": spec.triplet.to_json(), "constraints": spec.constraints.to_json()})
        assert again.triplet.to_json() == spec.triplet.to_json()


def test_console_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "levy_nfl.cli", "complete", str(fixture_path("complete_single_atom"))],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert res.returncode == OK and res.stdout.strip().startswith("complete")
