"""Newline-delimited JSON helpers with atomic writes.

Every file the toolkit emits starts with a single ``{"_meta": {...}}`` header
line carrying the seed of the run; readers skip it transparently.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import KbFormatError

META_KEY = "_meta"


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def read_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (lineno, record) pairs, skipping blank and header lines.

    Raises KbFormatError naming the offending line on malformed JSON or a
    non-object line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KbFormatError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise KbFormatError(path, lineno, "expected a JSON object")
            if META_KEY in obj:
                continue
            yield lineno, obj


def read_meta(path: str | Path) -> dict | None:
    """Return the header object of a JSONL file, if present."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if isinstance(obj, dict) and META_KEY in obj:
                return obj[META_KEY]
            return None
    return None


@contextmanager
def atomic_open(path: str | Path):
    """Open a file for writing via a temp file renamed into place on success.

    A failed write never leaves a partial output at the target path.
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".", suffix=".tmp")
    fh = os.fdopen(fd, "w", encoding="utf-8")
    try:
        yield fh
        fh.close()
        os.replace(tmp_name, path)
    except BaseException:
        fh.close()
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_records(path: str | Path, records: Iterable[dict], meta: dict | None = None) -> int:
    """Write records as JSONL atomically, returning the record count."""
    count = 0
    with atomic_open(path) as fh:
        if meta is not None:
            fh.write(dumps({META_KEY: meta}) + "\n")
        for rec in records:
            fh.write(dumps(rec) + "\n")
            count += 1
    return count
