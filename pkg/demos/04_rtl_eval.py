"""Scoring reasoning temporal localization answers."""

# %%
from tloc import Interval
from tloc.grammar import parse_answer, render_rtl_answer
from tloc.harness import fullspan_predictor, oracle_predictor, predict_all, silent_predictor
from tloc.llm_client import MockChatClient, make_judge
from tloc.records import Prediction, RTLSample
from tloc.rtl_eval import evaluate, interval_iou, self_match_bound
from tloc.timecodec import TimeGrid

# %% Answers are a bracketed token pair followed by an explanation
grid = TimeGrid(60.0)
text = render_rtl_answer(Interval(12.0, 30.0), "She rests after dancing.", grid)
print(text)
print(parse_answer(text, grid))

# %% The parser also reads seconds written out in words
print(parse_answer("It happens from 12.5 to 20 seconds.", grid).interval)

# %% IOU on its own
print(interval_iou(Interval(0, 10), Interval(5, 15)))

# %% A tiny ground-truth set
gt = [
    RTLSample("a", "a#0", "When is she least active?", Interval(32, 36), "Sleeping is the least active state.", 36.0),
    RTLSample("a", "a#1", "When does she first move rhythmically?", Interval(12, 30), "Dancing is rhythmic movement.", 36.0),
    RTLSample("b", "b#0", "When is the car clean?", Interval(41, 55), "Rinsing finishes the wash.", 55.0),
]
judge = make_judge(MockChatClient())

# %% Reference predictors bracket what a real model can score
for name, predictor in [("oracle", oracle_predictor(gt)), ("fullspan", fullspan_predictor()), ("silent", silent_predictor())]:
    report = evaluate(gt, predict_all(gt, predictor), judge=judge)
    print(f"{name:9s}", report.summary())
print("oracle floor from token rounding:", round(self_match_bound(gt), 2))

# %% Missing answers: counted as zero, or left out
partial = [Prediction("a", "a#0", "[<89> <100>] She sleeps.")]
print("score-zero:", evaluate(gt, partial).summary())
print("exclude:   ", evaluate(gt, partial, missing="exclude").summary())
