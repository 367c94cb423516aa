"""Generating RTL questions from captions, end to end, with the offline backend.

Point TLOC_JUDGE_ENDPOINT / TLOC_JUDGE_MODEL / TLOC_JUDGE_API_KEY at a chat
completion service and swap MockChatClient for ChatClient(ChatConfig.from_env())
to use a real model.
"""

# %%
import tempfile
from pathlib import Path

from tloc import Interval
from tloc.dataset_io import write_jsonl
from tloc.harness import run_pipeline
from tloc.llm_client import MockChatClient, make_judge
from tloc.records import CaptionedEvent, VideoRecord
from tloc.rtl_datagen import build_context, build_generation_prompt, generate_rtl

records = [
    VideoRecord("cook", 95.0, (
        CaptionedEvent(Interval(0, 20), "A man chops onions."),
        CaptionedEvent(Interval(20, 70), "He fries the onions in a pan."),
        CaptionedEvent(Interval(70, 95), "He serves the food on a plate."),
    )),
    VideoRecord("dog", 42.0, (
        CaptionedEvent(Interval(0, 30), "A dog runs after a ball."),
        CaptionedEvent(Interval(30, 42), "The dog lies down in the shade."),
    )),
]

# %% What the model sees for one video
messages = build_generation_prompt(build_context(records[0]))
print(messages[-1]["content"])

# %% Generate and validate
client = MockChatClient()
gt, stats = generate_rtl(records, client)
print(stats)
for s in gt:
    print(s.question_id, s.interval.to_list(), s.question)

# %% Score an oracle run on the generated set, judge included
out = Path(tempfile.mkdtemp())
write_jsonl(out / "gt.jsonl", gt)
report = run_pipeline(out / "gt.jsonl", "oracle", out / "pred.jsonl", judge=make_judge(client))
print(report.summary())
