"""Line-delimited JSON helpers and stage schema tags."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from pathlib import Path
from typing import Any

from speechcue.errors import MalformedRecord, MissingInput, SchemaVersionMismatch

SCHEMA_VERSION = 1

# Each stage stamps its records with "schema": "<kind>/<version>".
FEATURES = "speechcue.features"
THRESHOLDS = "speechcue.thresholds"
ANNOTATIONS = "speechcue.annotations"
PROMPTS = "speechcue.prompts"
PREDICTIONS = "speechcue.predictions"
REPORT = "speechcue.report"
MODEL = "speechcue.mlp"


def tag(kind: str) -> str:
    return f"{kind}/{SCHEMA_VERSION}"


def dumps(record: Mapping[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
            n += 1
    return n


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_number, record)`` pairs, skipping blank lines."""
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"{path} does not exist")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise MalformedRecord(lineno, "record is not an object")
            yield lineno, rec


def read_stage(path: str | Path, kind: str) -> list[dict[str, Any]]:
    """Read a stage output, checking every record carries the expected schema tag."""
    expected = tag(kind)
    out = []
    for lineno, rec in iter_jsonl(path):
        found = rec.get("schema")
        if found != expected:
            raise SchemaVersionMismatch(
                f"{path}:{lineno}: expected schema {expected!r}, found {found!r}"
            )
        out.append(rec)
    return out


def write_document(path: str | Path, doc: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def read_document(path: str | Path, kind: str) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"{path} does not exist")
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != tag(kind):
        raise SchemaVersionMismatch(
            f"{path}: expected schema {tag(kind)!r}, found {doc.get('schema')!r}"
        )
    return doc
