import json

import pytest
from click.testing import CliRunner

from brentmcmillan import bessel
from brentmcmillan.cli import cli, main


@pytest.fixture
def runner():
    return CliRunner()


def parse_text(out):
    """``key=value`` rows of the text emitter, header line skipped."""
    rows = []
    for line in out.strip().splitlines()[1:]:
        rows.append(dict(item.split("=", 1) for item in line.split()))
    return rows


def as_strings(rows):
    return [{k: str(v) for k, v in r.items()} for r in rows]


def test_gamma_text_and_json_agree(runner):
    text = runner.invoke(cli, ["gamma", "-d", "40"])
    js = runner.invoke(cli, ["gamma", "-d", "40", "--json"])
    assert text.exit_code == 0 and js.exit_code == 0
    payload = json.loads(js.output)
    assert payload["command"] == "gamma"
    assert payload["params"]["digits"] == 40
    t, j = parse_text(text.output), as_strings(payload["rows"])
    for key in ("value", "x", "precision_bits", "certified_abs_error", "truncation_estimate"):
        assert t[0][key] == j[0][key]
    assert j[0]["value"].startswith("0.5772156649015328606065")


def test_table1_formats_agree(runner):
    text = runner.invoke(cli, ["table1"])
    js = runner.invoke(cli, ["table1", "--json"])
    csv_out = runner.invoke(cli, ["table1", "--csv"])
    assert parse_text(text.output) == as_strings(json.loads(js.output)["rows"])
    lines = csv_out.output.strip().splitlines()
    assert lines[0] == "M,x,rel_error"
    assert lines[1] == "1,50,7.100e-03"
    assert lines[-1] == "5,150,1.510e-11"


@pytest.mark.parametrize(
    "which,first,last",
    [
        ("c", "1", "4035/256"),
        ("b", "7/3", "137885143760267/7067908108800"),
        ("ratio", "1", "116774621369177/4221897110323200"),
        ("delta", "1", "294911/5806080"),
        ("central", "1", "3551/414720"),
    ],
)
def test_coeffs_json(runner, which, first, last):
    cap = 4 if which in ("delta", "central") else 5
    n = 6 if which == "c" else cap
    res = runner.invoke(cli, ["coeffs", "--which", which, "--max", str(n), "--json"])
    assert res.exit_code == 0, res.output
    rows = json.loads(res.output)["rows"]
    assert rows[0]["value"] == first and rows[-1]["value"] == last


def test_coeffs_g_and_a(runner):
    g = json.loads(runner.invoke(cli, ["coeffs", "--which", "g", "--max", "2", "--json"]).output)["rows"]
    assert {"2k": 0, "j": 1, "value": "5/3"} in g
    a = json.loads(runner.invoke(cli, ["coeffs", "--which", "a", "--max", "2", "--json"]).output)["rows"]
    assert {"k": 1, "j": 0, "value": "1/3"} in a


def test_bound_check(runner):
    res = runner.invoke(cli, ["bound-check", "--from", "10", "--to", "12", "--json"])
    assert res.exit_code == 0
    rows = json.loads(res.output)["rows"]
    assert [r["x"] for r in rows] == [10, 11, 12]
    assert all(r["pass"] == "yes" for r in rows)


def test_remainder(runner):
    res = runner.invoke(cli, ["remainder", "--x", "50", "--M", "3"])
    assert res.exit_code == 0
    assert parse_text(res.output)[0]["rel_error"] == "2.140e-06"


def test_exit_codes():
    assert main(["gamma", "-d", "10"]) == 0
    assert main(["gamma", "-d", "50", "--x", "5"]) == 2
    assert main(["coeffs", "--which", "b", "--max", "6"]) == 3
    assert main(["remainder", "--x", "50", "--M", "6"]) == 3
    assert main(["bound-check", "--from", "3", "--to", "8"]) == 1
    assert main(["gamma"]) == 1


def test_precision_error_exit_code(tmp_path, monkeypatch):
    short = tmp_path / "g.txt"
    short.write_text(bessel.gamma_reference_digits()[:30])
    monkeypatch.setenv(bessel.GAMMA_REF_ENV, str(short))
    assert main(["remainder", "--x", "50", "--M", "2"]) == 4


def test_json_and_csv_exclusive(runner):
    res = runner.invoke(cli, ["table1", "--json", "--csv"])
    assert res.exit_code != 0
