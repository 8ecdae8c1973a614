import json

import pytest

from semimeasure.errors import SchemaError
from semimeasure.serialize import CODECS, decode, dumps, encode, loads, sample_workspace, type_name


@pytest.fixture(scope="module")
def workspace():
    return sample_workspace(2)


def test_every_type_present(workspace):
    assert {type_name(o) for o in workspace.objects.values()} == set(CODECS)


@pytest.mark.parametrize("kind", sorted(CODECS))
def test_record_round_trip(workspace, kind):
    for obj in workspace.objects.values():
        if type_name(obj) == kind:
            back = decode(json.loads(json.dumps(encode(obj))))
            assert type(back) is type(obj) and back == obj


def test_bytes_are_deterministic(workspace):
    text = dumps(workspace)
    assert dumps(loads(text)) == text
    assert dumps(sample_workspace(2)) == text


def test_schema_version_is_checked(workspace):
    data = json.loads(dumps(workspace))
    data["schema"] = "semimeasure/0"
    with pytest.raises(SchemaError, match="schema version"):
        loads(json.dumps(data))


def test_corrupted_coefficient_names_the_object(workspace):
    data = json.loads(dumps(workspace))
    name = next(k for k, rec in data["objects"].items() if rec["type"] == "posdef_form")
    data["objects"][name]["value"]["upper"][0][0] = "-5"
    with pytest.raises(SchemaError, match=repr(name)):
        loads(json.dumps(data))


def test_garbage_is_rejected():
    with pytest.raises(SchemaError):
        loads("not json")
    with pytest.raises(SchemaError):
        decode({"type": "nonsense", "value": {}})
    with pytest.raises(SchemaError):
        decode([1, 2])
