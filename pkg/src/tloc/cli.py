"""``tloc`` command line.

Exit status: 0 on success, 2 for usage errors, 1 for data errors. Errors
are printed to stderr as one line, ``tloc: error: <kind>: <message>``.
Human-readable summaries go to stdout; JSON reports only go to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Sequence

from . import dataset_io as io
from .errors import SchemaError, TlocError
from .harness import PREDICTORS, run_pipeline
from .llm_client import ChatClient, ChatConfig, MockChatClient, make_judge
from .records import InstructionSample
from .rtl_datagen import DEFAULT_QUESTIONS_PER_VIDEO, generate_rtl
from .rtl_eval import evaluate
from .slowfast import EmbeddingGrid, pool
from .tasks import (
    MixSpec,
    format_dense_captioning,
    format_event_localization,
    format_nlvqa,
    format_rtl,
    format_vqa,
    mix,
    task_counts,
)
from .timecodec import DEFAULT_STEPS, TimeGrid, decode_time, encode_time

log = logging.getLogger("tloc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _steps(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"must be >= 2, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets these flags appear before or after the subcommand; the
    # action objects are shared with every subparser, so defaults are applied
    # after parsing (see _GLOBAL_DEFAULTS), never via set_defaults.
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--steps", type=_steps, default=argparse.SUPPRESS, help=f"number of time tokens (default {DEFAULT_STEPS})")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    p.add_argument("--log-level", default=argparse.SUPPRESS, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p


_GLOBAL_DEFAULTS = {"steps": DEFAULT_STEPS, "seed": 0, "log_level": "WARNING"}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="tloc", description="Time-token video localization toolkit.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tc = sub.add_parser("timecode", help="convert between seconds and time tokens", parents=[common])
    tcs = tc.add_subparsers(dest="direction", required=True, parser_class=_Parser)
    enc = tcs.add_parser("encode", parents=[common])
    enc.add_argument("--tau", type=float, required=True, help="timestamp in seconds")
    enc.add_argument("--length", type=_positive_float, required=True, help="video length in seconds")
    dec = tcs.add_parser("decode", parents=[common])
    dec.add_argument("--token", type=int, required=True, help="time-token index")
    dec.add_argument("--length", type=_positive_float, required=True)

    pl = sub.add_parser("pool", help="SlowFast-pool an embedding grid", parents=[common])
    pl.add_argument("--input", required=True, type=Path)
    pl.add_argument("--s", type=_positive_int, default=2, help="spatial pooling ratio")
    pl.add_argument("--output", required=True, type=Path)
    pl.add_argument("--order", choices=["fast-first", "slow-first"], default="fast-first")

    fm = sub.add_parser("format", help="build instruction samples for one task", parents=[common])
    fm.add_argument("task", choices=["densecap", "eventloc", "vqa", "rtl", "nlvqa"])
    fm.add_argument("--input", required=True, type=Path)
    fm.add_argument("--out", required=True, type=Path)
    fm.add_argument("--vary-prompts", action="store_true", help="draw prompt paraphrases with --seed")

    mx = sub.add_parser("mix", help="sample and shuffle task pools", parents=[common])
    mx.add_argument("--spec", required=True, type=Path)
    mx.add_argument("--out", required=True, type=Path)
    mx.add_argument("--per-task", type=_positive_int, default=None)

    gen = sub.add_parser("gen", help="generate data", parents=[common])
    gens = gen.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    gr = gens.add_parser("rtl", parents=[common])
    gr.add_argument("--captions", required=True, type=Path)
    gr.add_argument("--out", required=True, type=Path)
    gr.add_argument("--n-per-video", type=_positive_int, default=DEFAULT_QUESTIONS_PER_VIDEO)
    gr.add_argument("--mock", action="store_true", help="use the offline mock backend")
    gr.add_argument("--workers", type=_positive_int, default=1)

    ev = sub.add_parser("eval", help="evaluate predictions", parents=[common])
    evs = ev.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    er = evs.add_parser("rtl", parents=[common])
    er.add_argument("--gt", required=True, type=Path)
    er.add_argument("--pred", required=True, type=Path)
    er.add_argument("--judge", choices=["mock", "remote"], default=None)
    er.add_argument("--missing", choices=["score-zero", "exclude"], default="score-zero")
    er.add_argument("--raw-ratio", action="store_true", help="report judge scores as ratios, not percent")
    er.add_argument("--workers", type=_positive_int, default=1, help="concurrent judge calls")
    er.add_argument("--report", required=True, type=Path)

    rn = sub.add_parser("run", help="run a reference predictor end to end", parents=[common])
    rn.add_argument("--gt", required=True, type=Path)
    rn.add_argument("--predictor", required=True, choices=PREDICTORS)
    rn.add_argument("--report", required=True, type=Path)
    rn.add_argument("--pred-out", type=Path, default=None, help="default: <report>.predictions.jsonl")
    rn.add_argument("--missing", choices=["score-zero", "exclude"], default="score-zero")
    rn.add_argument("--embeddings", type=Path, default=None, help="directory of <video_id>.bin grids")
    return parser


def _require_file(path: Path) -> None:
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")


def _cmd_timecode(args: argparse.Namespace) -> None:
    grid = TimeGrid(args.length, args.steps)
    if args.direction == "encode":
        print(encode_time(args.tau, grid))
    else:
        print(decode_time(args.token, grid))


def _cmd_pool(args: argparse.Namespace) -> None:
    _require_file(args.input)
    pooled = pool(io.read_embedding_grid(args.input), s=args.s, order=args.order)
    tokens = pooled.tokens()
    io.write_embedding_grid(EmbeddingGrid(tokens.reshape(tokens.shape[0], 1, 1, tokens.shape[1])), args.output)
    print(f"{len(pooled)} tokens ({pooled.fast.shape[0]} fast + {pooled.slow.shape[0]} slow), dim {tokens.shape[1]}")


def _format_samples(args: argparse.Namespace) -> list[InstructionSample]:
    rng = random.Random(args.seed) if args.vary_prompts else None
    if args.task in ("densecap", "eventloc"):
        records = io.load_dense_captions(args.input)
        out = []
        for r in records:
            if not r.events:
                continue
            grid = TimeGrid(r.duration, args.steps)
            if args.task == "densecap":
                out.append(format_dense_captioning(r, grid, rng))
            else:
                out.extend(format_event_localization(r, i, grid, rng) for i in range(len(r.events)))
        return out
    if args.task == "rtl":
        return [format_rtl(s, TimeGrid(s.duration, args.steps)) for s in io.read_rtl_samples(args.input)]
    out = []
    for lineno, obj in io.iter_jsonl(args.input):
        try:
            if args.task == "vqa":
                out.append(
                    format_vqa(
                        str(obj.get("question", "")),
                        str(obj.get("answer", "")),
                        id=str(obj.get("id", f"vqa#{lineno}")),
                        video_id=obj.get("video_id"),
                    )
                )
            else:
                out.append(format_nlvqa(obj, id=f"nlvqa#{lineno}"))
        except TlocError as exc:
            raise SchemaError(str(exc), lineno) from exc
    return out


def _cmd_format(args: argparse.Namespace) -> None:
    _require_file(args.input)
    n = io.write_jsonl(args.out, _format_samples(args))
    print(f"wrote {n} {args.task} samples to {args.out}")


def _cmd_mix(args: argparse.Namespace) -> None:
    _require_file(args.spec)
    spec = json.loads(args.spec.read_text(encoding="utf-8"))
    if not isinstance(spec, dict) or not isinstance(spec.get("pools"), dict):
        raise SchemaError(f"{args.spec}: expected an object with a 'pools' mapping of name -> JSONL path")
    base = args.spec.parent
    pools = {}
    for name, rel in spec["pools"].items():
        path = base / rel
        _require_file(path)
        pools[name] = list(io.read_instruction_samples(path))
    per_task = args.per_task or int(spec.get("per_task", 100_000))
    samples = mix(MixSpec(pools, per_task=per_task, seed=args.seed))
    io.write_jsonl(args.out, samples)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(task_counts(samples).items()))
    print(f"wrote {len(samples)} samples to {args.out} ({counts})")


def _client(mock: bool):
    return MockChatClient() if mock else ChatClient(ChatConfig.from_env())


def _cmd_gen(args: argparse.Namespace) -> None:
    _require_file(args.captions)
    records = io.load_dense_captions(args.captions)
    samples, stats = generate_rtl(records, _client(args.mock), n_questions=args.n_per_video, max_workers=args.workers)
    io.write_jsonl(args.out, samples)
    print(
        f"videos={stats.videos} accepted={stats.accepted} rejected={stats.rejected} "
        f"unparseable_videos={len(stats.unparseable_videos)} -> {args.out}"
    )


def _cmd_eval(args: argparse.Namespace) -> None:
    _require_file(args.gt)
    _require_file(args.pred)
    judge = None if args.judge is None else make_judge(_client(args.judge == "mock"))
    report = evaluate(
        list(io.read_rtl_samples(args.gt)),
        list(io.read_predictions(args.pred)),
        steps=args.steps,
        judge=judge,
        missing=args.missing,
        judge_scale=1.0 if args.raw_ratio else 100.0,
        judge_workers=args.workers,
    )
    args.report.write_text(report.to_json(), encoding="utf-8")
    print(report.summary())


def _cmd_run(args: argparse.Namespace) -> None:
    _require_file(args.gt)
    pred_out = args.pred_out or args.report.with_suffix(".predictions.jsonl")
    report = run_pipeline(args.gt, args.predictor, pred_out, steps=args.steps, missing=args.missing, embeddings_dir=args.embeddings)
    args.report.write_text(report.to_json(), encoding="utf-8")
    print(report.summary())


_COMMANDS = {
    "timecode": _cmd_timecode,
    "pool": _cmd_pool,
    "format": _cmd_format,
    "mix": _cmd_mix,
    "gen": _cmd_gen,
    "eval": _cmd_eval,
    "run": _cmd_run,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(f"tloc: error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except ValueError as exc:
        return _fail("usage", str(exc), 2)
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _COMMANDS[args.command](args)
    except (TlocError, OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    return 0
