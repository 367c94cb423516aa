"""Rendering time tokens into text and pulling intervals back out of answers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import islice

from .records import Interval
from .timecodec import TimeGrid, decode_time, encode_time

DEFAULT_TOKEN_TEMPLATE = "<{}>"

# Bounded digit runs keep int() well under CPython's str->int digit limit.
_NUM = r"(?<![\d.])\d{1,12}(?:\.\d{1,12})?(?![\d.])"


def render_time_token(t: int, template: str = DEFAULT_TOKEN_TEMPLATE) -> str:
    return template.format(t)


def render_rtl_answer(interval: Interval, explanation: str, grid: TimeGrid, template: str = DEFAULT_TOKEN_TEMPLATE) -> str:
    """``[<start> <end>] explanation``."""
    start = render_time_token(encode_time(interval.start, grid), template)
    end = render_time_token(encode_time(interval.end, grid), template)
    head = f"[{start} {end}]"
    return f"{head} {explanation}" if explanation else head


@dataclass(frozen=True)
class ParsedAnswer:
    interval: Interval | None
    explanation: str


@dataclass(frozen=True)
class _Patterns:
    token: re.Pattern[str]
    bracket: re.Pattern[str]
    from_to: re.Pattern[str]


@lru_cache(maxsize=16)
def _patterns(template: str) -> _Patterns:
    if template.count("{}") != 1:
        raise ValueError(f"token template must contain exactly one '{{}}', got {template!r}")
    prefix, suffix = (re.escape(p) for p in template.split("{}"))

    def tok(name: str) -> str:
        return rf"{prefix}(?P<{name}>\d{{1,12}}){suffix}"

    def item(name: str) -> str:
        return rf"(?:{tok(name + 't')}|(?P<{name}n>{_NUM}))"

    return _Patterns(
        token=re.compile(tok("t")),
        bracket=re.compile(rf"\[\s*{item('a')}\s*(?:,\s*|\s+|-\s*)?{item('b')}\s*\]"),
        from_to=re.compile(
            rf"\bfrom\s+(?P<an>{_NUM})\s*(?:s|sec|secs|seconds)?\s+(?:to|until)\s+(?P<bn>{_NUM})"
            r"(?:\s*(?:s|sec|secs|seconds)\b)?",
            re.IGNORECASE,
        ),
    )


def _token_seconds(raw: str, grid: TimeGrid) -> float:
    # out-of-vocabulary indices snap to the nearest valid token
    return decode_time(min(max(int(raw), 1), grid.steps), grid)


def _decimal_seconds(raw: str, grid: TimeGrid) -> float:
    return min(max(float(raw), 0.0), grid.length)


def _endpoint(m: re.Match[str], name: str, grid: TimeGrid) -> float:
    if m.group(name + "t") is not None:
        return _token_seconds(m.group(name + "t"), grid)
    return _decimal_seconds(m.group(name + "n"), grid)


_LEAD_IN = re.compile(r"\b(?:from|between)\s*$", re.IGNORECASE)


def _cut(text: str, start: int, end: int, drop_lead_in: bool = False) -> str:
    """Remove ``text[start:end]`` and tidy whitespace at the seam only."""
    head, tail = text[:start], text[end:]
    if drop_lead_in:
        head = _LEAD_IN.sub("", head)
    head, tail = head.rstrip(), tail.lstrip()
    if not head or not tail:
        return (head + tail).strip()
    sep = "" if tail[0] in ".,;:!?" else " "
    return (head + sep + tail).strip()


def parse_answer(text: str, grid: TimeGrid, template: str = DEFAULT_TOKEN_TEMPLATE) -> ParsedAnswer:
    """Extract the first timestamp pair from a model answer.

    Tried in order: a bracketed pair ``[X Y]`` (tokens or seconds), the first
    two time tokens anywhere, then ``from X to Y`` with plain seconds. A
    reversed pair is swapped. Text without any pair comes back with
    ``interval=None`` and the whole trimmed text as explanation.
    """
    pats = _patterns(template)
    m = pats.bracket.search(text)
    if m:
        a, b = _endpoint(m, "a", grid), _endpoint(m, "b", grid)
        explanation = _cut(text, m.start(), m.end())
    else:
        tokens = list(islice(pats.token.finditer(text), 2))
        if len(tokens) == 2:
            first, second = tokens
            a = _token_seconds(first.group("t"), grid)
            b = _token_seconds(second.group("t"), grid)
            explanation = _cut(text, first.start(), second.end(), drop_lead_in=True)
        else:
            m = pats.from_to.search(text)
            if not m:
                return ParsedAnswer(None, text.strip())
            a, b = _decimal_seconds(m.group("an"), grid), _decimal_seconds(m.group("bn"), grid)
            explanation = _cut(text, m.start(), m.end())
    if a > b:
        a, b = b, a
    return ParsedAnswer(Interval(a, b), explanation)
