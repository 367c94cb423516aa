"""Generating RTL question-answer pairs from dense captions with a chat model.

Pipeline per video: captions -> ``[mm:ss-mm:ss] sentence`` context ->
prompt messages -> model reply (a JSON list) -> validated ``RTLSample`` rows.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import EmptyRecord, WholeReplyUnparseable
from .records import Interval, RTLSample, VideoRecord
from .timecodec import round_half_away

log = logging.getLogger(__name__)

GENERATION_TAG = "[tloc:rtl-gen]"
DEFAULT_QUESTIONS_PER_VIDEO = 3
DURATION_SLACK = 1.0
ITEM_FIELDS = ("question", "start_mmss", "end_mmss", "explanation")


def format_clock(seconds: float) -> str:
    """``mm:ss``, or ``hh:mm:ss`` from one hour on. Rounds to whole seconds."""
    total = max(0, round_half_away(seconds))
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}" if h else f"{m:02d}:{s:02d}"


_CLOCK = re.compile(r"^\s*(?:(\d{1,3}):)?(\d{1,3}):(\d{1,2}(?:\.\d+)?)\s*$")


def parse_clock(text: str) -> float | None:
    """Inverse of :func:`format_clock`; ``None`` for anything malformed (e.g. ``99:99``)."""
    m = _CLOCK.match(text) if isinstance(text, str) else None
    if not m:
        return None
    hours, minutes, seconds = m.group(1), int(m.group(2)), float(m.group(3))
    if seconds >= 60 or (hours is not None and minutes >= 60):
        return None
    return (int(hours) if hours else 0) * 3600 + minutes * 60 + seconds


@dataclass(frozen=True)
class GenerationContext:
    video_id: str
    duration: float
    context_text: str


def build_context(record: VideoRecord) -> GenerationContext:
    if not record.events:
        raise EmptyRecord(f"{record.video_id}: no caption events")
    lines = [
        f"[{format_clock(e.interval.start)}-{format_clock(e.interval.end)}] {e.sentence}"
        for e in record.sorted_events()
    ]
    return GenerationContext(record.video_id, record.duration, "\n".join(lines))


@dataclass(frozen=True)
class FewShotExample:
    context_text: str
    items: tuple[dict[str, str], ...]
    duration: float | None = None


# Written for this package as demonstrations of the reply format.
DEFAULT_FEW_SHOTS = (
    FewShotExample(
        context_text=(
            "[00:00-00:12] A man fills a bucket with soapy water.\n"
            "[00:12-00:41] He scrubs the hood and doors of a red car.\n"
            "[00:41-00:55] He rinses the car with a hose."
        ),
        items=(
            {
                "question": "When does the car get wet without any soap being added?",
                "start_mmss": "00:41",
                "end_mmss": "00:55",
                "explanation": "Rinsing with the hose sprays only water onto the car, which happens at the end.",
            },
            {
                "question": "When is he preparing before touching the car?",
                "start_mmss": "00:00",
                "end_mmss": "00:12",
                "explanation": "Filling the bucket is the preparation step before any cleaning of the car begins.",
            },
        ),
        duration=55.0,
    ),
    FewShotExample(
        context_text=(
            "[00:00-00:20] Two teams line up on a sandy court.\n"
            "[00:20-01:05] Players hit a ball back and forth over a net.\n"
            "[01:05-01:15] The winning team hugs and cheers."
        ),
        items=(
            {
                "question": "When do the players celebrate?",
                "start_mmss": "01:05",
                "end_mmss": "01:15",
                "explanation": "Hugging and cheering are signs of celebration, shown after the rally.",
            },
        ),
        duration=75.0,
    ),
)


def _system_prompt(n_questions: int) -> str:
    return (
        f"{GENERATION_TAG} You write reasoning temporal localization questions about videos. "
        "You are given timestamped captions of one video. Write questions that ask when something "
        "happens, where the answer event is not named directly in the question and must be inferred "
        "by reasoning or world knowledge (for example, asking when a person is least active rather "
        "than when they sleep). For each question give the start and end time of the target event, "
        "taken from the captions, and an explanation of the reasoning that leads to that time range.\n"
        "Reply with only a JSON list. Each element is an object with the string fields "
        '"question", "start_mmss", "end_mmss", "explanation"; times use mm:ss (hh:mm:ss past one hour). '
        f"Produce {n_questions} items unless instructed otherwise."
    )


def _user_prompt(context_text: str, n_questions: int) -> str:
    return f"Captions:\n{context_text}\n\nWrite {n_questions} questions."


def build_generation_prompt(
    ctx: GenerationContext,
    few_shots: Sequence[FewShotExample] = DEFAULT_FEW_SHOTS,
    n_questions: int = DEFAULT_QUESTIONS_PER_VIDEO,
) -> list[dict[str, str]]:
    """System turn, a user/assistant pair per few-shot example, then the request."""
    if n_questions < 1:
        raise ValueError(f"n_questions must be >= 1, got {n_questions}")
    messages = [{"role": "system", "content": _system_prompt(n_questions)}]
    for shot in few_shots:
        messages.append({"role": "user", "content": _user_prompt(shot.context_text, len(shot.items))})
        messages.append({"role": "assistant", "content": json.dumps(list(shot.items), indent=1)})
    messages.append({"role": "user", "content": _user_prompt(ctx.context_text, n_questions)})
    return messages


def _find_list(reply: str) -> list[Any]:
    text = reply.strip()
    fence = re.search(r"```(?:json)?\s*(.*?)```", text, re.DOTALL)
    candidates = [text] + ([fence.group(1)] if fence else [])
    i, j = text.find("["), text.rfind("]")
    if 0 <= i < j:
        candidates.append(text[i : j + 1])
    for c in candidates:
        try:
            obj = json.loads(c)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, list):
            return obj
    raise WholeReplyUnparseable(f"no JSON list in reply: {reply[:120]!r}")


def _accept(item: Any, record: VideoRecord) -> tuple[str, Interval, str] | None:
    if not isinstance(item, dict):
        return None
    if not all(isinstance(item.get(k), str) and item[k].strip() for k in ITEM_FIELDS):
        return None
    start, end = parse_clock(item["start_mmss"]), parse_clock(item["end_mmss"])
    if start is None or end is None or start > end or end > record.duration + DURATION_SLACK:
        return None
    interval = Interval(min(start, record.duration), min(end, record.duration))
    return item["question"].strip(), interval, item["explanation"].strip()


def parse_generation(reply: str, record: VideoRecord) -> tuple[list[RTLSample], int]:
    """Validate a generation reply; returns ``(accepted, rejected_count)``.

    Items with missing fields, malformed times, ``start > end`` or an end past
    ``duration + 1 s`` are rejected. Accepted ends are clamped to the duration.
    """
    items = _find_list(reply)
    samples, rejected = [], 0
    for item in items:
        ok = _accept(item, record)
        if ok is None:
            rejected += 1
            continue
        question, interval, explanation = ok
        samples.append(
            RTLSample(
                video_id=record.video_id,
                question_id=f"{record.video_id}#g{len(samples)}",
                question=question,
                interval=interval,
                explanation=explanation,
                duration=record.duration,
            )
        )
    return samples, rejected


@dataclass
class GenerationStats:
    videos: int = 0
    accepted: int = 0
    rejected: int = 0
    unparseable_videos: list[str] = field(default_factory=list)


def generate_rtl(
    records: Iterable[VideoRecord],
    client,
    n_questions: int = DEFAULT_QUESTIONS_PER_VIDEO,
    few_shots: Sequence[FewShotExample] = DEFAULT_FEW_SHOTS,
    max_workers: int = 1,
) -> tuple[list[RTLSample], GenerationStats]:
    """Run the pipeline over ``records``; output is ordered by video id.

    A video whose reply holds no JSON list is skipped and listed in
    ``stats.unparseable_videos``.
    """
    todo = sorted((r for r in records if r.events), key=lambda r: r.video_id)

    def one(record: VideoRecord) -> str:
        return client.chat(build_generation_prompt(build_context(record), few_shots, n_questions))

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        replies = list(pool.map(one, todo))

    stats = GenerationStats(videos=len(todo))
    out: list[RTLSample] = []
    for record, reply in zip(todo, replies):
        try:
            samples, rejected = parse_generation(reply, record)
        except WholeReplyUnparseable:
            log.warning("%s: generation reply unparseable", record.video_id)
            stats.unparseable_videos.append(record.video_id)
            continue
        out.extend(samples)
        stats.accepted += len(samples)
        stats.rejected += rejected
    return out, stats


# --- offline generator used by MockChatClient -----------------------------

_LINE = re.compile(r"^\[(?P<a>[\d:.]+)-(?P<b>[\d:.]+)\]\s+(?P<s>.+)$")
_TEMPLATES = (
    ("When does the final activity shown in the video take place?", "It is the last captioned event: {s}", -1),
    ("When does the video first show what is going on?", "The opening captioned event sets the scene: {s}", 0),
    ("When does the activity that follows the opening scene happen?", "It comes right after the first event: {s}", 1),
    ("When does the activity just before the ending happen?", "It directly precedes the last event: {s}", -2),
)


def mock_generation_reply(user_prompt: str) -> str:
    """Deterministic stand-in reply: questions about caption positions."""
    lines = [m for m in (_LINE.match(x.strip()) for x in user_prompt.splitlines()) if m]
    want = re.search(r"Write (\d+) questions", user_prompt)
    n = int(want.group(1)) if want else DEFAULT_QUESTIONS_PER_VIDEO
    if not lines:
        return "[]"
    offset = int(hashlib.sha256(user_prompt.encode("utf-8")).hexdigest()[:8], 16) % len(_TEMPLATES)
    items = []
    for i in range(n):
        question, why, pos = _TEMPLATES[(offset + i) % len(_TEMPLATES)]
        m = lines[pos % len(lines)]
        items.append(
            {
                "question": question,
                "start_mmss": m.group("a"),
                "end_mmss": m.group("b"),
                "explanation": why.format(s=m.group("s")),
            }
        )
    return json.dumps(items, indent=1)
