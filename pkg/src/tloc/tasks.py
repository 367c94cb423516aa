"""Instruction-sample formatters for the five training tasks and the task mixer.

Each prompt list starts with the canonical wording; the remaining entries are
in-house paraphrases, used only when a ``random.Random`` is passed in.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .errors import EmptyField, EmptyPool, EmptyRecord, IndexOutOfRange
from .grammar import DEFAULT_TOKEN_TEMPLATE, render_rtl_answer, render_time_token
from .records import InstructionSample, RTLSample, Task, VideoRecord
from .timecodec import TimeGrid, encode_time

DENSE_CAPTION_PROMPTS = (
    "Provide a detailed description of the given video. Each sentence should begin with the start and end timestamps.",
    "Describe the video. Each sentence begins with start and end timestamps.",
    "Describe every event in the video in temporal order, starting each sentence with its start and end timestamps.",
    "Narrate what happens in the video. Prefix each sentence with the start and end timestamps of the event.",
    "Give a timestamped account of the video, one sentence per event, each beginning with its start and end timestamps.",
)

EVENT_LOCALIZATION_PROMPTS = (
    'When does "{sentence}" happen in the video? Answer the question only using start and end timestamps.',
    'At what point in the video does "{sentence}" take place? Answer the question only using start and end timestamps.',
    'Locate "{sentence}" in the video. Reply with only the start and end timestamps.',
    'Find the moment when "{sentence}" occurs. Give only its start and end timestamps.',
    'In which time span does "{sentence}" happen? Respond with the start and end timestamps only.',
)

VQA_SUFFIX = "Answer the question using a single word or phrase."


def _pick(prompts: Sequence[str], rng: random.Random | None) -> str:
    return prompts[0] if rng is None else rng.choice(prompts)


def _tokens(start: float, end: float, grid: TimeGrid, template: str) -> str:
    return f"{render_time_token(encode_time(start, grid), template)} {render_time_token(encode_time(end, grid), template)}"


def format_dense_captioning(
    record: VideoRecord,
    grid: TimeGrid,
    rng: random.Random | None = None,
    template: str = DEFAULT_TOKEN_TEMPLATE,
) -> InstructionSample:
    if not record.events:
        raise EmptyRecord(f"{record.video_id}: no caption events")
    parts = [f"{_tokens(e.interval.start, e.interval.end, grid, template)} {e.sentence}" for e in record.sorted_events()]
    return InstructionSample(
        id=f"{record.video_id}#densecap",
        source_task=Task.DENSE_CAPTIONING,
        prompt=_pick(DENSE_CAPTION_PROMPTS, rng),
        answer=" ".join(parts),
        video_id=record.video_id,
    )


def format_event_localization(
    record: VideoRecord,
    event_index: int,
    grid: TimeGrid,
    rng: random.Random | None = None,
    template: str = DEFAULT_TOKEN_TEMPLATE,
) -> InstructionSample:
    if not 0 <= event_index < len(record.events):
        raise IndexOutOfRange(f"{record.video_id}: event {event_index} of {len(record.events)}")
    event = record.events[event_index]
    sentence = event.sentence.strip().rstrip(".")
    return InstructionSample(
        id=f"{record.video_id}#eventloc{event_index}",
        source_task=Task.EVENT_LOCALIZATION,
        prompt=_pick(EVENT_LOCALIZATION_PROMPTS, rng).format(sentence=sentence),
        answer=_tokens(event.interval.start, event.interval.end, grid, template),
        video_id=record.video_id,
    )


def format_vqa(question: str, short_answer: str, id: str = "vqa", video_id: str | None = None) -> InstructionSample:
    """Append the short-answer suffix to ``question`` unless it is already there."""
    question, short_answer = question.strip(), short_answer.strip()
    if not question:
        raise EmptyField(f"{id}: empty question")
    if not short_answer:
        raise EmptyField(f"{id}: empty answer")
    prompt = question if question.endswith(VQA_SUFFIX) else f"{question} {VQA_SUFFIX}"
    return InstructionSample(id=id, source_task=Task.VIDEO_QA, prompt=prompt, answer=short_answer, video_id=video_id)


def format_rtl(sample: RTLSample, grid: TimeGrid, template: str = DEFAULT_TOKEN_TEMPLATE) -> InstructionSample:
    return InstructionSample(
        id=sample.question_id,
        source_task=Task.RTL,
        prompt=sample.question,
        answer=render_rtl_answer(sample.interval, sample.explanation, grid, template),
        video_id=sample.video_id,
    )


def _first_turns(conversations: Sequence[Mapping[str, Any]]) -> tuple[str, str]:
    prompt = answer = ""
    for turn in conversations:
        speaker = turn.get("from", turn.get("role"))
        text = turn.get("value", turn.get("content", ""))
        if not prompt and speaker in ("human", "user"):
            prompt = text
        elif prompt and speaker in ("gpt", "assistant"):
            answer = text
            break
    return prompt, answer


def format_nlvqa(sample: Mapping[str, Any] | InstructionSample, id: str = "nlvqa") -> InstructionSample:
    """Pass an existing instruction-tuning turn through unchanged.

    Accepts an ``InstructionSample``, a ``{"prompt", "answer"}`` mapping, or a
    LLaVA-style ``{"conversations": [...]}`` record (first human/gpt pair).
    """
    if isinstance(sample, InstructionSample):
        prompt, answer, sid, video_id = sample.prompt, sample.answer, sample.id, sample.video_id
    else:
        if "conversations" in sample:
            prompt, answer = _first_turns(sample["conversations"])
        else:
            prompt, answer = sample.get("prompt", ""), sample.get("answer", "")
        sid, video_id = sample.get("id", id), sample.get("video_id")
    if not isinstance(prompt, str) or not prompt.strip():
        raise EmptyField(f"{sid}: empty prompt")
    if not isinstance(answer, str) or not answer.strip():
        raise EmptyField(f"{sid}: empty answer")
    return InstructionSample(id=str(sid), source_task=Task.NLVQA, prompt=prompt, answer=answer, video_id=video_id)


# --- mixing ---------------------------------------------------------------

def child_seed(seed: int, name: str) -> int:
    """Stable 64-bit seed for one named stream; independent of other names."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class MixSpec:
    task_sources: Mapping[str, Sequence[InstructionSample]]
    per_task: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.per_task < 1:
            raise ValueError(f"per_task must be >= 1, got {self.per_task}")
        for name, pool in self.task_sources.items():
            if not pool:
                raise EmptyPool(f"pool {name!r} is empty")


def mix(spec: MixSpec) -> list[InstructionSample]:
    """Draw ``per_task`` samples with replacement from each pool, then shuffle.

    Every pool contributes exactly ``per_task`` samples. Pools are visited in
    sorted name order and each uses its own child seed, so adding a pool does
    not change what the others draw.
    """
    drawn: list[InstructionSample] = []
    for name in sorted(spec.task_sources):
        pool = spec.task_sources[name]
        rng = random.Random(child_seed(spec.seed, name))
        drawn.extend(pool[rng.randrange(len(pool))] for _ in range(spec.per_task))
    random.Random(child_seed(spec.seed, "__shuffle__")).shuffle(drawn)
    return drawn


def task_counts(samples: Sequence[InstructionSample]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in samples:
        counts[s.source_task.value] = counts.get(s.source_task.value, 0) + 1
    return counts
