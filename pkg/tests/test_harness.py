import random

import numpy as np
import pytest

from tloc.dataset_io import read_predictions, write_embedding_grid, write_jsonl
from tloc.errors import DuplicatePrediction
from tloc.harness import Query, fullspan_predictor, oracle_predictor, predict_all, run_pipeline, silent_predictor
from tloc.records import Interval, RTLSample
from tloc.rtl_eval import evaluate, self_match_bound
from tloc.slowfast import EmbeddingGrid
from tloc.timecodec import TimeGrid, max_discretization_error


def synthetic_gt(seed=0, videos=8, min_len_factor=10):
    """Intervals at least ``min_len_factor`` discretization errors long."""
    rng = random.Random(seed)
    gt = []
    for v in range(videos):
        d = rng.uniform(20, 300)
        e = max_discretization_error(TimeGrid(d))
        for q in range(rng.randint(1, 5)):
            length = rng.uniform(min_len_factor * e, d)
            a = rng.uniform(0, d - length)
            gt.append(RTLSample(f"vid{v:02d}", f"vid{v:02d}#{q}", f"When does thing {q} happen?", Interval(a, a + length), f"Reason {q}.", d))
    return gt


def test_oracle_predictor():
    gt = synthetic_gt()
    r = evaluate(gt, predict_all(gt, oracle_predictor(gt)))
    assert r.p_at_half == 100.0
    assert self_match_bound(gt) <= r.miou <= 100.0
    for q, g in zip(r.questions, sorted(gt, key=lambda g: g.key)):
        assert q.iou >= 1 - 2 * max_discretization_error(TimeGrid(g.duration)) / g.interval.length


def test_oracle_worst_case_reaches_codec_bound():
    # endpoints just past a tie on the inside: both round inward by ~one half step
    grid = TimeGrid(99.0)  # one token per second, max error 0.5 s
    gt = [RTLSample("v", "q", "When?", Interval(10.5, 20.4999), "e", 99.0)]
    r = evaluate(gt, predict_all(gt, oracle_predictor(gt)))
    assert r.questions[0].iou == pytest.approx((20 - 11) / (20.4999 - 10.5))
    assert r.miou < 92
    assert r.miou >= 100 * (1 - 2 * max_discretization_error(grid) / gt[0].interval.length)
    assert r.miou >= self_match_bound(gt)


def test_ten_error_lengths_only_guarantee_eighty():
    # intervals of exactly 10 discretization errors: the bound is 80, and the
    # inward worst case gets arbitrarily close to it
    grid = TimeGrid(99.0)
    gt = [RTLSample("v", "q", "When?", Interval(10.5, 15.4999999), "e", 99.0)]
    assert self_match_bound(gt) == pytest.approx(80.0, abs=1e-4)
    r = evaluate(gt, predict_all(gt, oracle_predictor(gt)))
    assert r.miou == pytest.approx(80.0, abs=1e-4)
    assert r.miou < 88
    assert max_discretization_error(grid) == 0.5


def test_oracle_empty():
    r = evaluate([], predict_all([], oracle_predictor([])))
    assert r.n_questions == 0 and r.miou is None


@pytest.mark.parametrize("frac, expected", [((0.0, 1.0), 1.0), ((0.0, 0.5), 0.5), ((0.2, 0.3), 0.1)])
def test_fullspan(frac, expected):
    d = 60.0
    gt = [RTLSample("v", "q", "When?", Interval(frac[0] * d, frac[1] * d), "e", d)]
    r = evaluate(gt, predict_all(gt, fullspan_predictor()))
    assert r.questions[0].iou == pytest.approx(expected, abs=1e-12)


def test_fullspan_answer_text():
    q = Query("v", "q", "When?", 10.0)
    assert fullspan_predictor()(q) == "[<1> <100>] The event spans the video."
    assert fullspan_predictor(steps=50)(q).startswith("[<1> <50>]")


def test_silent_modes():
    gt = synthetic_gt(1)
    preds = predict_all(gt, silent_predictor())
    assert evaluate(gt, preds).miou == 0.0
    excluded = evaluate(gt, preds, missing="exclude")
    assert excluded.miou is None and excluded.p_at_half is None
    assert evaluate([], predict_all([], silent_predictor()), missing="exclude").n_questions == 0


def test_run_pipeline_oracle(tmp_path):
    gt = synthetic_gt(2)
    write_jsonl(tmp_path / "gt.jsonl", gt)
    r = run_pipeline(tmp_path / "gt.jsonl", "oracle", tmp_path / "out" / "pred.jsonl")
    assert r.p_at_half == 100.0
    assert self_match_bound(gt) <= r.miou <= 100.0
    assert len(list(read_predictions(tmp_path / "out" / "pred.jsonl"))) == len(gt)


def test_run_pipeline_fullspan_closed_form(tmp_path):
    gt = synthetic_gt(3)
    write_jsonl(tmp_path / "gt.jsonl", gt)
    r = run_pipeline(tmp_path / "gt.jsonl", fullspan_predictor(), tmp_path / "pred.jsonl")
    per_video = {}
    for g in gt:
        per_video.setdefault(g.video_id, []).append(g.interval.length / g.duration)
    expected = 100 * sum(sum(v) / len(v) for v in per_video.values()) / len(per_video)
    assert r.miou == pytest.approx(expected, rel=1e-12)


def test_run_pipeline_duplicate_ids(tmp_path):
    gt = synthetic_gt(4, videos=1)
    write_jsonl(tmp_path / "gt.jsonl", gt + gt[:1])
    with pytest.raises(DuplicatePrediction):
        run_pipeline(tmp_path / "gt.jsonl", "oracle", tmp_path / "pred.jsonl")


def test_shuffled_gt_same_report_and_predictions(tmp_path):
    gt = synthetic_gt(5)
    shuffled = gt[:]
    random.Random(0).shuffle(shuffled)
    write_jsonl(tmp_path / "a.jsonl", gt)
    write_jsonl(tmp_path / "b.jsonl", shuffled)
    ra = run_pipeline(tmp_path / "a.jsonl", "fullspan", tmp_path / "pa.jsonl")
    rb = run_pipeline(tmp_path / "b.jsonl", "fullspan", tmp_path / "pb.jsonl")
    assert ra.to_json() == rb.to_json()
    assert (tmp_path / "pa.jsonl").read_bytes() == (tmp_path / "pb.jsonl").read_bytes()


def test_same_predictor_twice_identical_files(tmp_path):
    write_jsonl(tmp_path / "gt.jsonl", synthetic_gt(6))
    run_pipeline(tmp_path / "gt.jsonl", "oracle", tmp_path / "p1.jsonl")
    run_pipeline(tmp_path / "gt.jsonl", "oracle", tmp_path / "p2.jsonl")
    assert (tmp_path / "p1.jsonl").read_bytes() == (tmp_path / "p2.jsonl").read_bytes()


def test_predictor_receives_pooled_tokens(tmp_path):
    gt = [RTLSample("v", "q", "When?", Interval(0, 5), "e", 10.0)]
    write_embedding_grid(EmbeddingGrid(np.ones((8, 4, 4, 3), dtype=np.float32)), tmp_path / "v.bin")
    seen = []

    class Recorder:
        reentrant = True

        def __call__(self, query):
            seen.append(query.tokens)
            return "[<1> <50>] e"

    predict_all(gt, Recorder(), embeddings_dir=tmp_path)
    assert seen[0].shape == (8 + 16, 3)


def test_zero_length_question_contributes_nothing_to_bound():
    gt = [RTLSample("v", "q", "When?", Interval(1.0, 1.0), "x", 10.0)]
    assert self_match_bound(gt) == 0.0
    # 1.0 s on a 10 s grid of 100 steps is not a token position, so the oracle misses it
    assert evaluate(gt, predict_all(gt, oracle_predictor(gt))).miou == 0.0
