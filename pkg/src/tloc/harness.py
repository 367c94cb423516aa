"""Predictor interface, reference predictors, and end-to-end evaluation runs."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Protocol

import numpy as np

from .dataset_io import PathLike, read_embedding_grid, read_rtl_samples, write_jsonl
from .grammar import DEFAULT_TOKEN_TEMPLATE, render_rtl_answer, render_time_token
from .records import Prediction, RTLSample
from .rtl_eval import EvalReport, Judge, MissingMode, evaluate
from .slowfast import pool
from .timecodec import DEFAULT_STEPS, TimeGrid


@dataclass(frozen=True)
class Query:
    video_id: str
    question_id: str
    question: str
    duration: float
    tokens: np.ndarray | None = None


class Predictor(Protocol):
    """Maps a query to answer text. ``reentrant`` predictors may be called concurrently."""

    reentrant: bool

    def __call__(self, query: Query) -> str: ...


class OraclePredictor:
    """Answers every known question with its ground-truth interval and explanation."""

    reentrant = True

    def __init__(self, gt: Iterable[RTLSample], steps: int = DEFAULT_STEPS, template: str = DEFAULT_TOKEN_TEMPLATE):
        self._gt = {s.key: s for s in gt}
        self.steps = steps
        self.template = template

    def __call__(self, query: Query) -> str:
        s = self._gt.get((query.video_id, query.question_id))
        if s is None:
            return ""
        return render_rtl_answer(s.interval, s.explanation, TimeGrid(s.duration, self.steps), self.template)


class FullSpanPredictor:
    reentrant = True
    explanation = "The event spans the video."

    def __init__(self, steps: int = DEFAULT_STEPS, template: str = DEFAULT_TOKEN_TEMPLATE):
        self.steps = steps
        self.template = template

    def __call__(self, query: Query) -> str:
        return f"[{render_time_token(1, self.template)} {render_time_token(self.steps, self.template)}] {self.explanation}"


class SilentPredictor:
    """Explanation only, no timestamps: the behaviour of models never taught to localize."""

    reentrant = True
    answer = "The person in the video is doing the activity described in the question."

    def __call__(self, query: Query) -> str:
        return self.answer


def oracle_predictor(gt: Iterable[RTLSample], steps: int = DEFAULT_STEPS) -> OraclePredictor:
    return OraclePredictor(gt, steps)


def fullspan_predictor(steps: int = DEFAULT_STEPS) -> FullSpanPredictor:
    return FullSpanPredictor(steps)


def silent_predictor() -> SilentPredictor:
    return SilentPredictor()


PREDICTORS = ("oracle", "fullspan", "silent")


def make_predictor(name: Literal["oracle", "fullspan", "silent"], gt: Iterable[RTLSample], steps: int = DEFAULT_STEPS) -> Predictor:
    if name == "oracle":
        return oracle_predictor(gt, steps)
    if name == "fullspan":
        return fullspan_predictor(steps)
    if name == "silent":
        return silent_predictor()
    raise ValueError(f"unknown predictor {name!r}; choose from {PREDICTORS}")


def _tokens_for(video_id: str, embeddings_dir: PathLike | None, s: int) -> np.ndarray | None:
    if embeddings_dir is None:
        return None
    path = Path(embeddings_dir) / f"{video_id}.bin"
    if not path.exists():
        return None
    return pool(read_embedding_grid(path), s=s).tokens()


def predict_all(gt: Iterable[RTLSample], predictor: Predictor, embeddings_dir: PathLike | None = None, s: int = 2) -> list[Prediction]:
    """One prediction per ground-truth question, sorted by (video_id, question_id)."""
    preds = []
    for g in sorted(gt, key=lambda g: g.key):
        query = Query(g.video_id, g.question_id, g.question, g.duration, _tokens_for(g.video_id, embeddings_dir, s))
        preds.append(Prediction(g.video_id, g.question_id, predictor(query)))
    return preds


def run_pipeline(
    gt_path: PathLike,
    predictor: Predictor | str,
    pred_path: PathLike,
    steps: int = DEFAULT_STEPS,
    missing: MissingMode = "score-zero",
    judge: Judge | None = None,
    embeddings_dir: PathLike | None = None,
) -> EvalReport:
    """Read ground truth, run ``predictor`` on every question, write the
    predictions as JSON lines to ``pred_path`` and score them."""
    gt = list(read_rtl_samples(gt_path))
    if isinstance(predictor, str):
        predictor = make_predictor(predictor, gt, steps)  # type: ignore[arg-type]
    preds = predict_all(gt, predictor, embeddings_dir)
    os.makedirs(Path(pred_path).parent or ".", exist_ok=True)
    write_jsonl(pred_path, preds)
    return evaluate(gt, preds, steps=steps, judge=judge, missing=missing)
