"""Reasoning-temporal-localization metrics.

Temporal metrics (mIOU, Precision@0.5) are averaged within each video first
and then across videos, so a video with many questions does not dominate.
The judge relative score is averaged directly over question-answer pairs.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Literal

from .errors import DuplicateGroundTruth, DuplicatePrediction
from .grammar import DEFAULT_TOKEN_TEMPLATE, parse_answer
from .records import Interval, Prediction, RTLSample
from .timecodec import DEFAULT_STEPS, TimeGrid, max_discretization_error

MissingMode = Literal["score-zero", "exclude"]
HIT_THRESHOLD = 0.5


def interval_iou(a: Interval, b: Interval) -> float:
    """Temporal intersection over union.

    Two identical zero-length intervals score 1.0; any other pair whose union
    has zero length scores 0.0.
    """
    inter = max(0.0, min(a.end, b.end) - max(a.start, b.start))
    union = (a.end - a.start) + (b.end - b.start) - inter
    if union <= 0:
        return 1.0 if (a.start, a.end) == (b.start, b.end) else 0.0
    return inter / union


def self_match_bound(gt: Iterable[RTLSample], steps: int = DEFAULT_STEPS) -> float | None:
    """Lowest mIOU (percent) that answers rendered from ``gt`` itself can score.

    Each endpoint moves by at most the discretization error ``e`` when it is
    written as a time token, so a question of length ``len`` keeps
    IOU >= 1 - 2e/len, floored at 0. Zero-length questions get 0: the point
    only survives exactly when it sits on a token. The per-question bounds
    are averaged the same two-level way as mIOU.
    """
    per_video: dict[str, list[float]] = {}
    for g in gt:
        e = max_discretization_error(TimeGrid(g.duration, steps))
        b = 0.0 if g.interval.length == 0 else max(0.0, 1 - 2 * e / g.interval.length)
        per_video.setdefault(g.video_id, []).append(b)
    if not per_video:
        return None
    return 100.0 * _mean(_mean(v) for v in per_video.values())


@dataclass(frozen=True)
class JudgeVerdict:
    gt_score: int
    pred_score: int
    raw_reply: str = ""
    clamped: bool = False

    @property
    def relative(self) -> float:
        return self.pred_score / self.gt_score


Judge = Callable[[str, str, str], JudgeVerdict]


@dataclass(frozen=True)
class QuestionResult:
    video_id: str
    question_id: str
    iou: float | None
    hit_at_half: bool | None
    judge_relative: float | None = None
    has_interval: bool = False
    has_prediction: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "video_id": self.video_id,
            "question_id": self.question_id,
            "iou": self.iou,
            "hit_at_half": self.hit_at_half,
            "judge_relative": self.judge_relative,
            "has_interval": self.has_interval,
            "has_prediction": self.has_prediction,
        }


@dataclass(frozen=True)
class VideoSummary:
    miou: float
    p_at_half: float
    n_questions: int


@dataclass
class EvalReport:
    miou: float | None
    p_at_half: float | None
    judge_score: float | None
    per_video: dict[str, VideoSummary]
    n_videos: int
    n_questions: int
    missing_mode: MissingMode = "score-zero"
    judge_scale: float = 100.0
    n_missing_predictions: int = 0
    n_without_interval: int = 0
    n_unknown_predictions: int = 0
    n_judge_clamped: int = 0
    questions: list[QuestionResult] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "miou": self.miou,
            "p_at_half": self.p_at_half,
            "judge_score": self.judge_score,
            "judge_scale": self.judge_scale,
            "missing_mode": self.missing_mode,
            "n_videos": self.n_videos,
            "n_questions": self.n_questions,
            "n_missing_predictions": self.n_missing_predictions,
            "n_without_interval": self.n_without_interval,
            "n_unknown_predictions": self.n_unknown_predictions,
            "n_judge_clamped": self.n_judge_clamped,
            "per_video": {
                vid: {"miou": v.miou, "p_at_half": v.p_at_half, "n_questions": v.n_questions}
                for vid, v in self.per_video.items()
            },
            "questions": [q.to_dict() for q in self.questions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def summary(self) -> str:
        def fmt(x: float | None) -> str:
            return "n/a" if x is None else f"{x:.2f}"

        return (
            f"videos={self.n_videos} questions={self.n_questions} "
            f"mIOU={fmt(self.miou)} P@0.5={fmt(self.p_at_half)} judge={fmt(self.judge_score)}"
        )


def _mean(xs: Iterable[float]) -> float:
    xs = list(xs)
    return math.fsum(xs) / len(xs)


def evaluate(
    gt: Iterable[RTLSample],
    preds: Iterable[Prediction],
    steps: int = DEFAULT_STEPS,
    judge: Judge | None = None,
    missing: MissingMode = "score-zero",
    judge_scale: float = 100.0,
    template: str = DEFAULT_TOKEN_TEMPLATE,
    judge_workers: int = 1,
) -> EvalReport:
    """Score predictions against ground truth.

    Each prediction is parsed with a time grid built from its video's
    duration. With ``missing="score-zero"`` a missing prediction or one with
    no timestamps gets IOU 0; with ``"exclude"`` it is left out of the
    temporal metrics (a video with nothing left is dropped, and if nothing is
    left at all mIOU and P@0.5 are ``None``). The judge, when given, is called
    for every ground-truth question, with an empty explanation for a missing
    prediction. Set ``judge_scale=1`` to report raw ratios instead of percent.
    """
    if missing not in ("score-zero", "exclude"):
        raise ValueError(f"unknown missing mode {missing!r}")

    by_key: dict[tuple[str, str], Prediction] = {}
    for p in preds:
        if p.key in by_key:
            raise DuplicatePrediction(f"duplicate prediction for video {p.video_id!r} question {p.question_id!r}")
        by_key[p.key] = p
    gt_by_key: dict[tuple[str, str], RTLSample] = {}
    for g in gt:
        if g.key in gt_by_key:
            raise DuplicateGroundTruth(f"duplicate ground truth for video {g.video_id!r} question {g.question_id!r}")
        gt_by_key[g.key] = g
    keys = sorted(gt_by_key)
    n_unknown = sum(1 for k in by_key if k not in gt_by_key)

    parsed = {}
    for k in keys:
        g = gt_by_key[k]
        p = by_key.get(k)
        parsed[k] = parse_answer(p.answer_text, TimeGrid(g.duration, steps), template) if p else None

    verdicts: dict[tuple[str, str], JudgeVerdict] = {}
    if judge is not None:
        def ask(k: tuple[str, str]) -> JudgeVerdict:
            g, pa = gt_by_key[k], parsed[k]
            return judge(g.question, g.explanation, pa.explanation if pa else "")

        with ThreadPoolExecutor(max_workers=max(1, judge_workers)) as pool:
            verdicts = dict(zip(keys, pool.map(ask, keys)))

    results: list[QuestionResult] = []
    for k in keys:
        g, pa = gt_by_key[k], parsed[k]
        has_interval = pa is not None and pa.interval is not None
        if has_interval:
            iou: float | None = interval_iou(pa.interval, g.interval)
        else:
            iou = 0.0 if missing == "score-zero" else None
        v = verdicts.get(k)
        results.append(
            QuestionResult(
                video_id=k[0],
                question_id=k[1],
                iou=iou,
                hit_at_half=None if iou is None else iou > HIT_THRESHOLD,
                judge_relative=None if v is None else judge_scale * v.relative,
                has_interval=has_interval,
                has_prediction=pa is not None,
            )
        )

    per_video: dict[str, VideoSummary] = {}
    videos = sorted({k[0] for k in keys})
    for vid in videos:
        scored = [r for r in results if r.video_id == vid and r.iou is not None]
        if scored:
            per_video[vid] = VideoSummary(
                miou=100.0 * _mean(r.iou for r in scored),
                p_at_half=100.0 * _mean(float(r.hit_at_half) for r in scored),
                n_questions=len(scored),
            )

    judged = [r.judge_relative for r in results if r.judge_relative is not None]
    return EvalReport(
        miou=_mean(v.miou for v in per_video.values()) if per_video else None,
        p_at_half=_mean(v.p_at_half for v in per_video.values()) if per_video else None,
        judge_score=_mean(judged) if judged else None,
        per_video=per_video,
        n_videos=len(videos),
        n_questions=len(keys),
        missing_mode=missing,
        judge_scale=judge_scale,
        n_missing_predictions=sum(1 for r in results if not r.has_prediction),
        n_without_interval=sum(1 for r in results if not r.has_interval),
        n_unknown_predictions=n_unknown,
        n_judge_clamped=sum(1 for v in verdicts.values() if v.clamped),
        questions=results,
    )
