"""JSON-Lines 입출력 테스트"""

import pytest

from mapf_core.errors import TraceFormatError
from utils.trace_codec import canonical_line, hash_lines, read_jsonl, write_jsonl


def test_canonical_line_sorts_keys():
    assert canonical_line({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
    assert canonical_line({"a": [1, 2], "b": 1}) == canonical_line({"b": 1, "a": [1, 2]})


def test_hash_depends_on_order():
    assert hash_lines(["a", "b"]) != hash_lines(["b", "a"])
    assert hash_lines(["a", "b"]) == hash_lines(["a", "b"])


@pytest.mark.parametrize("name", ["trace.jsonl", "trace.jsonl.gz"])
def test_write_and_read(tmp_path, name):
    records = [{"type": "step", "t": 0}, {"type": "step", "t": 1, "x": 2.5}]
    path = tmp_path / "nested" / name
    assert write_jsonl(path, records) == 2
    assert read_jsonl(path) == records


def test_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text('{"t": 0}\n\n{"t": 1}\n', encoding="utf-8")
    assert read_jsonl(path) == [{"t": 0}, {"t": 1}]


def test_bad_json_line(tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text('{"t": 0}\n{"t": \n', encoding="utf-8")
    with pytest.raises(TraceFormatError, match=":2:"):
        read_jsonl(path)


def test_non_object_line(tmp_path):
    path = tmp_path / "trace.jsonl"
    path.write_text("[1, 2]\n", encoding="utf-8")
    with pytest.raises(TraceFormatError):
        read_jsonl(path)


def test_missing_file(tmp_path):
    with pytest.raises(TraceFormatError):
        read_jsonl(tmp_path / "absent.jsonl")
