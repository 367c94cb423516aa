"""Time-token video localization toolkit: codec, SlowFast pooling, task
formatting, RTL evaluation and data generation."""

from .errors import TlocError
from .grammar import ParsedAnswer, parse_answer, render_rtl_answer, render_time_token
from .records import CaptionedEvent, InstructionSample, Interval, Prediction, RTLSample, Task, VideoRecord
from .rtl_eval import EvalReport, JudgeVerdict, evaluate, interval_iou
from .slowfast import EmbeddingGrid, PooledTokens, fast_tokens, pool, select_slow_frames, slow_tokens
from .timecodec import TimeGrid, decode_time, encode_time, max_discretization_error

__version__ = "0.1.0"

__all__ = [
    "CaptionedEvent",
    "EmbeddingGrid",
    "EvalReport",
    "InstructionSample",
    "Interval",
    "JudgeVerdict",
    "ParsedAnswer",
    "PooledTokens",
    "Prediction",
    "RTLSample",
    "Task",
    "TimeGrid",
    "TlocError",
    "VideoRecord",
    "decode_time",
    "encode_time",
    "evaluate",
    "fast_tokens",
    "interval_iou",
    "max_discretization_error",
    "parse_answer",
    "pool",
    "render_rtl_answer",
    "render_time_token",
    "select_slow_frames",
    "slow_tokens",
]
