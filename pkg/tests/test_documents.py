from __future__ import annotations

import pytest

from nchodge import documents
from nchodge.documents import (
    DocumentError,
    as_int,
    builtin_name,
    detect_format,
    dump_document,
    parse_document,
    read_document,
    require,
)


def test_detect_format():
    assert detect_format('  {"a": 1}') == "json"
    assert detect_format("name: p1\n") == "yaml"
    assert detect_format("anything", "json") == "json"


def test_parse_json_document():
    assert parse_document('{"aerial": 1, "boundary": 2}') == {"aerial": 1, "boundary": 2}


def test_parse_rejects_non_mapping_and_bad_json():
    with pytest.raises(DocumentError):
        parse_document("[1, 2]")
    with pytest.raises(DocumentError):
        parse_document("{not json")


@pytest.mark.skipif(documents.strictyaml is None, reason="strictyaml not installed")
def test_yaml_scalars_arrive_as_strings(tmp_path):
    path = tmp_path / "graph.yaml"
    path.write_text("family: disk\naerial: 1\nboundary: 2\n", encoding="utf-8")
    data = read_document(path)
    assert data == {"family": "disk", "aerial": "1", "boundary": "2"}
    assert as_int(data["aerial"], "aerial") == 1


def test_read_missing_document(tmp_path):
    with pytest.raises(DocumentError):
        read_document(tmp_path / "missing.json")


def test_builtin_name():
    assert builtin_name("builtin:p2") == "p2"
    assert builtin_name("rings/p2.json") is None


def test_require_and_as_int_errors():
    with pytest.raises(DocumentError, match="basis"):
        require({}, "basis", "ring")
    with pytest.raises(DocumentError):
        as_int(True, "k")
    with pytest.raises(DocumentError):
        as_int("two", "k")


def test_dump_document_keeps_key_order():
    assert dump_document({"b": 1, "a": 2}).index('"b"') < dump_document({"b": 1, "a": 2}).index('"a"')
