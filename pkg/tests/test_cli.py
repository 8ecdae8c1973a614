import io
import json

import pytest

from semimeasure.cli import run_command
from semimeasure.serialize import CODECS, load, type_name


@pytest.fixture
def run(monkeypatch):
    def go(argv, stdin=""):
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
        out, err = io.StringIO(), io.StringIO()
        code = run_command(argv, out, err)
        return code, out.getvalue(), err.getvalue()

    return go


def test_pipe_gaussian_into_moment(run):
    code, gauss, _ = run(["measure", "gaussian", "--q", "[[1]]"])
    assert code == 0 and json.loads(gauss)["type"] == "ag_measure"
    code, out, _ = run(["measure", "moment", "--index", "[4]"], gauss)
    assert code == 0 and out.strip() == "3"


def test_form_push_and_check(run):
    code, out, _ = run(["form", "push", "--q", "[[1,1],[1,3]]", "--map", "[[1,0]]"])
    assert code == 0 and json.loads(out)["value"]["upper"] == [["2/3"]]
    code, out, _ = run(["form", "check", "--q", "[[1,2],[2,1]]"])
    assert code == 0 and json.loads(out)["positive_definite"] is False


def test_domain_error_exit_code(run):
    code, _, err = run(["measure", "gaussian", "--q", "[[1,2],[2,1]]"])
    assert code == 1 and "NotPositiveDefinite" in err


def test_usage_errors(run):
    assert run(["measure", "frobnicate"])[0] == 64
    assert run([])[0] == 64
    assert run(["measure", "moment", "--index", "[4"])[0] == 64


def test_schema_error_on_bad_input(run):
    code, _, err = run(["measure", "moment", "--index", "[2]"], '{"type": "ag_measure", "value": 1}')
    assert code == 1


def test_family_round_trip(run, monkeypatch):
    monkeypatch.setenv("SEMIMEASURE_WINDOW", "1")
    code, fam, _ = run(["family", "gaussian"])
    assert code == 0
    code, out, _ = run(["family", "coherence"], fam)
    assert code == 0 and json.loads(out)["status"] == "pass"
    _, once, _ = run(["family", "fourier"], fam)
    _, twice, _ = run(["family", "fourier"], once)
    _, parity, _ = run(["family", "parity"], fam)
    assert json.loads(twice) == json.loads(parity)


def test_wedge_and_theory(run):
    code, out, _ = run(["wedge", "transition", "--window", "2", "--to", "[-1,0,1]"])
    assert code == 0 and json.loads(out)["value"]["terms"] == [[[-1], "1"]]
    code, out, _ = run(["theory", "haar", "--window", "1"])
    assert code == 0 and json.loads(out)["type"] == "haar_theory"


def test_complex_commands(run):
    code, out, _ = run(["complex", "derham", "--window", "2"])
    assert code == 0 and json.loads(out)["type"] == "derham_family"
    # indices -1, 0 do not form a complex pair
    code, _, err = run(["complex", "derham", "--window", "1"])
    assert code == 1 and "NotComplexWindow" in err
    code, out, _ = run(["complex", "koszul"])
    assert code == 0


def test_audit_command(run):
    code, out, _ = run(["audit", "schur", "--jobs", "1"])
    assert code == 0 and out.startswith("PASS")
    code, out, _ = run(["audit", "persistence", "--jobs", "1", "--json"])
    assert code == 0 and json.loads(out)[0]["status"] == "pass"


def test_dump_and_load(run, tmp_path):
    path = tmp_path / "ws.json"
    code, _, _ = run(["dump", str(path), "--sample"])
    assert code == 0
    ws = load(path)
    assert {type_name(o) for o in ws.objects.values()} == set(CODECS)
    name = sorted(ws.objects)[0]
    code, out, _ = run(["load", str(path), "--get", name])
    assert code == 0 and "type" in json.loads(out)
    assert run(["load", str(tmp_path / "missing.json")])[0] == 1
