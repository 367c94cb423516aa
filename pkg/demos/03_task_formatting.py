"""Building instruction samples from a dense-caption record and mixing task pools."""

# %%
import json
import tempfile
from pathlib import Path

from tloc import TimeGrid
from tloc.dataset_io import load_dense_captions
from tloc.records import InstructionSample, Task
from tloc.tasks import MixSpec, format_dense_captioning, format_event_localization, format_vqa, mix, task_counts

captions = {
    "v_demo": {
        "duration": 36.0,
        "timestamps": [[0.0, 10.0], [12.0, 30.0], [32.0, 36.0]],
        "sentences": ["A woman is standing.", "The woman is dancing.", "The woman is sleeping."],
    }
}
path = Path(tempfile.mkdtemp()) / "captions.json"
path.write_text(json.dumps(captions))
(record,) = load_dense_captions(path)
grid = TimeGrid(record.duration)

# %% Dense captioning: every event, in order, with its time tokens
dc = format_dense_captioning(record, grid)
print(dc.prompt)
print(dc.answer)

# %% Event localization: one sentence in, one token pair out
el = format_event_localization(record, 1, grid)
print(el.prompt)
print(el.answer)

# %% Video QA: short answers get a one-word instruction
print(format_vqa("What is the woman doing at the end?", "sleeping").prompt)

# %% Mixing: a fixed number of samples per task, deterministic for a seed
pools = {t.value: [InstructionSample(f"{t.value}{i}", t, f"prompt {i}", f"answer {i}") for i in range(7)] for t in Task}
mixed = mix(MixSpec(pools, per_task=20, seed=1))
print(len(mixed), task_counts(mixed))
print([s.id for s in mixed[:6]])
