"""
JSON-Lines 입출력 (경로가 .gz로 끝나면 gzip)
"""

import gzip
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Union

from mapf_core.errors import TraceFormatError

PathLike = Union[str, Path]


def _open(path: Path, mode: str):
    if path.suffix == ".gz":
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def canonical_line(record: Dict[str, Any]) -> str:
    """키 정렬, 공백 없는 직렬화 (해시 기준)"""
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=True)


def hash_lines(lines: Iterable[str]) -> str:
    digest = hashlib.sha256()
    for line in lines:
        digest.update(line.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> int:
    """레코드를 한 줄씩 기록하고 줄 수 반환"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with _open(path, "w") as f:
        for record in records:
            f.write(canonical_line(record))
            f.write("\n")
            count += 1
    return count


def iter_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    """JSON-Lines 읽기

    Raises:
        TraceFormatError: 파일 없음 또는 잘못된 줄
    """
    path = Path(path)
    try:
        with _open(path, "r") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise TraceFormatError(f"{path}:{lineno}: {e}") from e
                if not isinstance(record, dict):
                    raise TraceFormatError(f"{path}:{lineno}: record must be an object")
                yield record
    except OSError as e:
        raise TraceFormatError(f"cannot read {path}: {e}") from e


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path))
