"""Plain record types passed between the I/O, formatting and evaluation layers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import EmptyField, InvalidInterval, SchemaError


@dataclass(frozen=True, order=True)
class Interval:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise InvalidInterval(f"non-finite interval ({self.start}, {self.end})")
        if not 0 <= self.start <= self.end:
            raise InvalidInterval(f"expected 0 <= start <= end, got ({self.start}, {self.end})")

    @property
    def length(self) -> float:
        return self.end - self.start

    def clamp(self, duration: float) -> Interval:
        return Interval(min(self.start, duration), min(self.end, duration))

    def to_list(self) -> list[float]:
        return [self.start, self.end]


@dataclass(frozen=True)
class CaptionedEvent:
    interval: Interval
    sentence: str

    def __post_init__(self) -> None:
        if not self.sentence.strip():
            raise EmptyField("caption sentence is empty")


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    duration: float
    events: tuple[CaptionedEvent, ...] = ()

    def sorted_events(self) -> list[CaptionedEvent]:
        # stable: ties on start keep file order
        return sorted(self.events, key=lambda e: e.interval.start)


def _require(d: Mapping[str, Any], key: str, kind: type | tuple[type, ...], line: int | None) -> Any:
    if key not in d:
        raise SchemaError(f"missing field {key!r}", line)
    value = d[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"field {key!r} has wrong type {type(value).__name__}", line)
    return value


@dataclass(frozen=True)
class RTLSample:
    video_id: str
    question_id: str
    question: str
    interval: Interval
    explanation: str
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise InvalidInterval(f"{self.video_id}: duration must be > 0")
        if self.interval.end > self.duration:
            raise InvalidInterval(
                f"{self.question_id}: interval end {self.interval.end} exceeds duration {self.duration}"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.video_id, self.question_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "question_id": self.question_id,
            "question": self.question,
            "interval": self.interval.to_list(),
            "explanation": self.explanation,
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], line: int | None = None) -> RTLSample:
        interval = _require(d, "interval", list, line)
        if len(interval) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in interval):
            raise SchemaError("field 'interval' must be [start, end]", line)
        try:
            return cls(
                video_id=_require(d, "video_id", str, line),
                question_id=_require(d, "question_id", str, line),
                question=_require(d, "question", str, line),
                interval=Interval(float(interval[0]), float(interval[1])),
                explanation=_require(d, "explanation", str, line),
                duration=float(_require(d, "duration", (int, float), line)),
            )
        except InvalidInterval as exc:
            raise SchemaError(str(exc), line) from exc


@dataclass(frozen=True)
class Prediction:
    video_id: str
    question_id: str
    answer_text: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.video_id, self.question_id)

    def to_dict(self) -> dict[str, Any]:
        return {"video_id": self.video_id, "question_id": self.question_id, "answer_text": self.answer_text}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], line: int | None = None) -> Prediction:
        return cls(
            video_id=_require(d, "video_id", str, line),
            question_id=_require(d, "question_id", str, line),
            answer_text=_require(d, "answer_text", str, line),
        )


class Task(str, enum.Enum):
    DENSE_CAPTIONING = "dense_captioning"
    EVENT_LOCALIZATION = "event_localization"
    VIDEO_QA = "video_qa"
    NLVQA = "nlvqa"
    RTL = "rtl"


@dataclass(frozen=True)
class InstructionSample:
    id: str
    source_task: Task
    prompt: str
    answer: str
    video_id: str | None = field(default=None)

    def __post_init__(self) -> None:
        if not self.prompt.strip():
            raise EmptyField(f"{self.id}: empty prompt")
        if not self.answer.strip():
            raise EmptyField(f"{self.id}: empty answer")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source_task": self.source_task.value,
            "prompt": self.prompt,
            "answer": self.answer,
            "video_id": self.video_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], line: int | None = None) -> InstructionSample:
        task = _require(d, "source_task", str, line)
        try:
            source_task = Task(task)
        except ValueError:
            raise SchemaError(f"unknown source_task {task!r}", line) from None
        video_id = d.get("video_id")
        if video_id is not None and not isinstance(video_id, str):
            raise SchemaError("field 'video_id' must be a string or null", line)
        try:
            return cls(
                id=_require(d, "id", str, line),
                source_task=source_task,
                prompt=_require(d, "prompt", str, line),
                answer=_require(d, "answer", str, line),
                video_id=video_id,
            )
        except EmptyField as exc:
            raise SchemaError(str(exc), line) from exc
