"""Readers and writers for dense-caption JSON, JSON-lines record streams and
``LITEMB01`` binary embedding grids."""

from __future__ import annotations

import collections
import json
import logging
import math
import os
import struct
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, TypeVar

import numpy as np

from .errors import BadMagic, EmptyField, ParseError, SchemaError, TruncatedFile
from .records import CaptionedEvent, InstructionSample, Interval, Prediction, RTLSample, VideoRecord
from .slowfast import EmbeddingGrid

log = logging.getLogger(__name__)

PathLike = str | os.PathLike[str]
R = TypeVar("R")

EMBEDDING_MAGIC = b"LITEMB01"
_HEADER = struct.Struct("<8s4I")
_FLOAT = np.dtype("<f4")


# --- dense captions -------------------------------------------------------

def _number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def parse_dense_captions(obj: Any, stats: collections.Counter[str] | None = None) -> list[VideoRecord]:
    """Convert an ActivityNet-Captions style mapping into records.

    Timestamps outside ``[0, duration]`` are clamped and a reversed pair is
    swapped; both are tallied in ``stats`` (keys ``clamped`` and ``swapped``).
    """
    if not isinstance(obj, dict):
        raise SchemaError(f"top level must be an object keyed by video id, got {type(obj).__name__}")
    stats = stats if stats is not None else collections.Counter()
    records = []
    for video_id, entry in obj.items():
        if not isinstance(entry, dict):
            raise SchemaError(f"{video_id}: entry must be an object")
        for key in ("duration", "timestamps", "sentences"):
            if key not in entry:
                raise SchemaError(f"{video_id}: missing field {key!r}")
        duration = entry["duration"]
        if not _number(duration) or duration <= 0:
            raise SchemaError(f"{video_id}: duration must be a positive number, got {duration!r}")
        stamps, sentences = entry["timestamps"], entry["sentences"]
        if not isinstance(stamps, list) or not isinstance(sentences, list):
            raise SchemaError(f"{video_id}: timestamps and sentences must be lists")
        if len(stamps) != len(sentences):
            raise SchemaError(f"{video_id}: {len(stamps)} timestamps but {len(sentences)} sentences")
        events = []
        for i, (pair, sentence) in enumerate(zip(stamps, sentences)):
            if not (isinstance(pair, list) and len(pair) == 2 and all(_number(x) for x in pair)):
                raise SchemaError(f"{video_id}: timestamp {i} must be [start, end], got {pair!r}")
            if not isinstance(sentence, str):
                raise SchemaError(f"{video_id}: sentence {i} must be a string")
            start, end = float(pair[0]), float(pair[1])
            if start > end:
                start, end = end, start
                stats["swapped"] += 1
            cs, ce = min(max(start, 0.0), duration), min(max(end, 0.0), duration)
            if (cs, ce) != (start, end):
                stats["clamped"] += 1
            try:
                events.append(CaptionedEvent(Interval(cs, ce), sentence.strip()))
            except EmptyField:
                raise SchemaError(f"{video_id}: sentence {i} is empty") from None
        records.append(VideoRecord(str(video_id), float(duration), tuple(events)))
    return records


def load_dense_captions(path: PathLike, stats: collections.Counter[str] | None = None) -> list[VideoRecord]:
    stats = stats if stats is not None else collections.Counter()
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    records = parse_dense_captions(obj, stats)
    if stats["clamped"] or stats["swapped"]:
        log.warning("%s: clamped %d and swapped %d caption timestamps", path, stats["clamped"], stats["swapped"])
    return records


# --- binary embedding grids ----------------------------------------------

def write_embedding_grid(grid: EmbeddingGrid, path: PathLike) -> None:
    header = _HEADER.pack(EMBEDDING_MAGIC, grid.frames, grid.grid_h, grid.grid_w, grid.dim)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(grid.data, dtype=_FLOAT).tobytes())


def read_embedding_grid(path: PathLike) -> EmbeddingGrid:
    raw = Path(path).read_bytes()
    if len(raw) < len(EMBEDDING_MAGIC) or raw[: len(EMBEDDING_MAGIC)] != EMBEDDING_MAGIC:
        raise BadMagic(f"{path}: not a LITEMB01 file")
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: header is {len(raw)} bytes, expected {_HEADER.size}")
    _, t, h, w, d = _HEADER.unpack_from(raw)
    expected = t * h * w * d * _FLOAT.itemsize
    payload = len(raw) - _HEADER.size
    if payload != expected:
        raise TruncatedFile(f"{path}: header declares {t}x{h}x{w}x{d} floats ({expected} bytes), payload is {payload}")
    data = np.frombuffer(raw, dtype=_FLOAT, offset=_HEADER.size).reshape(t, h, w, d)
    return EmbeddingGrid(data)


# --- JSON lines -----------------------------------------------------------

def iter_jsonl(path: PathLike) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(line_number, object)`` for each non-blank line."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, lineno) from None
            if not isinstance(obj, dict):
                raise ParseError(f"expected a JSON object, got {type(obj).__name__}", lineno)
            yield lineno, obj


def read_jsonl(path: PathLike, parse: Callable[[dict[str, Any], int], R] | None = None) -> Iterator[Any]:
    for lineno, obj in iter_jsonl(path):
        yield obj if parse is None else parse(obj, lineno)


def _assign_question_ids(rows: Iterable[tuple[int, dict[str, Any]]]) -> Iterator[tuple[int, dict[str, Any]]]:
    ordinals: collections.Counter[str] = collections.Counter()
    for lineno, obj in rows:
        video_id = obj.get("video_id")
        if isinstance(video_id, str) and "question_id" not in obj:
            obj = {**obj, "question_id": f"{video_id}#{ordinals[video_id]}"}
        if isinstance(video_id, str):
            ordinals[video_id] += 1
        yield lineno, obj


def read_rtl_samples(path: PathLike) -> Iterator[RTLSample]:
    """RTL samples; a missing ``question_id`` becomes ``<video_id>#<ordinal>``."""
    for lineno, obj in _assign_question_ids(iter_jsonl(path)):
        yield RTLSample.from_dict(obj, lineno)


def read_predictions(path: PathLike) -> Iterator[Prediction]:
    return read_jsonl(path, Prediction.from_dict)


def read_instruction_samples(path: PathLike) -> Iterator[InstructionSample]:
    return read_jsonl(path, InstructionSample.from_dict)


def dumps_record(record: Any) -> str:
    obj = record.to_dict() if hasattr(record, "to_dict") else record
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def write_jsonl(path: PathLike, records: Iterable[Any]) -> int:
    """Write one canonical JSON object per line; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(dumps_record(record))
            f.write("\n")
            n += 1
    return n
