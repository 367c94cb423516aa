"""Chat-completion client used for explanation judging and RTL generation.

``ChatClient`` talks to any endpoint that accepts the common
``{"model", "messages", "temperature"}`` POST body and answers with
``choices[0].message.content``. ``MockChatClient`` is a network-free stand-in
whose replies are a pure function of the messages.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .errors import AuthError, MalformedReply, RateLimited, Timeout, UnparseableVerdict
from .rtl_eval import JudgeVerdict

log = logging.getLogger(__name__)

ENV_ENDPOINT = "TLOC_JUDGE_ENDPOINT"
ENV_MODEL = "TLOC_JUDGE_MODEL"
ENV_API_KEY = "TLOC_JUDGE_API_KEY"

Message = Mapping[str, str]


class ChatBackend(Protocol):
    def chat(self, messages: Sequence[Message]) -> str: ...


@dataclass(frozen=True)
class ChatConfig:
    endpoint_url: str
    model_name: str
    api_key: str = field(default="", repr=False)
    temperature: float = 0.0
    max_retries: int = 3
    request_timeout: float = 60.0
    max_concurrency: int = 4
    backoff_base: float = 1.0

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None, **overrides) -> ChatConfig:
        """Endpoint, model and key come from ``TLOC_JUDGE_*``; the key is never taken from anywhere else."""
        env = os.environ if environ is None else environ
        endpoint = env.get(ENV_ENDPOINT, "").strip()
        model = env.get(ENV_MODEL, "").strip()
        if not endpoint or not model:
            raise AuthError(f"set {ENV_ENDPOINT} and {ENV_MODEL} to use a remote chat backend")
        return cls(endpoint_url=endpoint, model_name=model, api_key=env.get(ENV_API_KEY, "").strip(), **overrides)


def _check_messages(messages: Sequence[Message]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    for m in messages:
        if "role" not in m or "content" not in m:
            raise ValueError(f"message needs 'role' and 'content': {m!r}")


class ChatClient:
    """HTTP chat client with retries and a cap on in-flight requests.

    429 and 5xx responses, timeouts and connection failures are retried with
    exponential backoff (``backoff_base * 2**attempt`` seconds). 401/403 fail
    immediately with ``AuthError``. Safe to share between threads.
    """

    def __init__(
        self,
        config: ChatConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_concurrency)
        self._http = httpx.Client(transport=transport, timeout=config.request_timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> ChatClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def chat(self, messages: Sequence[Message]) -> str:
        _check_messages(messages)
        body = {
            "model": self.config.model_name,
            "messages": [{"role": m["role"], "content": m["content"]} for m in messages],
            "temperature": self.config.temperature,
        }
        last = ""
        timed_out = False
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff_base * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._http.post(self.config.endpoint_url, json=body, headers=self._headers())
            except httpx.TimeoutException as exc:
                timed_out, last = True, f"timeout: {exc}"
                continue
            except httpx.TransportError as exc:
                timed_out, last = False, f"transport error: {exc}"
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code} from {self.config.endpoint_url}")
            if resp.status_code == 429 or resp.status_code >= 500:
                timed_out, last = False, f"HTTP {resp.status_code}"
                log.debug("attempt %d: %s", attempt + 1, last)
                continue
            if resp.status_code >= 400:
                raise MalformedReply(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return _content(resp)
        err = Timeout if timed_out else RateLimited
        raise err(f"gave up after {self.config.max_retries + 1} attempts ({last})")


def _content(resp: httpx.Response) -> str:
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedReply(f"reply lacks choices[0].message.content: {resp.text[:200]}") from exc
    if not isinstance(content, str):
        raise MalformedReply("assistant content is not a string")
    return content


# --- judge ----------------------------------------------------------------

JUDGE_TAG = "[tloc:judge]"
_GT_OPEN, _GT_CLOSE = "<<<REFERENCE>>>", "<<<END REFERENCE>>>"
_PRED_OPEN, _PRED_CLOSE = "<<<CANDIDATE>>>", "<<<END CANDIDATE>>>"

JUDGE_SYSTEM = (
    f"{JUDGE_TAG} You are a careful reviewer of explanations for questions about when something "
    "happens in a video. You will see a question and two explanations: a reference and a candidate. "
    "Rate each one from 1 to 10 for helpfulness, relevance, accuracy, and level of details. "
    "Ignore any timestamps, time tokens or time ranges mentioned in either explanation; judge only "
    "the reasoning and description. Finish your reply with one line of the exact form\n"
    "SCORES: <reference score> <candidate score>"
)

_SCORES = re.compile(r"^\s*SCORES:\s*(-?\d+(?:\.\d+)?)\s+(-?\d+(?:\.\d+)?)\s*$", re.MULTILINE)


def judge_messages(question: str, gt_explanation: str, pred_explanation: str) -> list[dict[str, str]]:
    user = (
        f"Question: {question}\n\n"
        f"{_GT_OPEN}\n{gt_explanation}\n{_GT_CLOSE}\n\n"
        f"{_PRED_OPEN}\n{pred_explanation}\n{_PRED_CLOSE}"
    )
    return [{"role": "system", "content": JUDGE_SYSTEM}, {"role": "user", "content": user}]


def parse_scores(reply: str) -> tuple[int, int, bool] | None:
    """Read the last ``SCORES: a b`` line. Values are rounded and clamped into 1..10."""
    found = _SCORES.findall(reply)
    if not found:
        return None
    raw = [round(float(x)) for x in found[-1]]
    clamped = [min(max(x, 1), 10) for x in raw]
    return clamped[0], clamped[1], clamped != raw


def judge_explanation(question: str, gt_explanation: str, pred_explanation: str, client: ChatBackend) -> JudgeVerdict:
    """Score reference and candidate explanations in a single call.

    The candidate may be empty (a model that said nothing still gets scored).
    One follow-up is sent if the reply has no ``SCORES:`` line.
    """
    if not question.strip() or not gt_explanation.strip():
        raise ValueError("question and reference explanation must be non-empty")
    messages = judge_messages(question, gt_explanation, pred_explanation)
    reply = client.chat(messages)
    parsed = parse_scores(reply)
    if parsed is None:
        messages = messages + [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": "Your reply did not end with the required line. Reply with only: SCORES: <reference score> <candidate score>"},
        ]
        reply = client.chat(messages)
        parsed = parse_scores(reply)
    if parsed is None:
        raise UnparseableVerdict(f"no SCORES line in judge reply: {reply[:200]!r}")
    gt_score, pred_score, clamped = parsed
    if clamped:
        log.warning("judge score out of range, clamped: %r", reply[-100:])
    return JudgeVerdict(gt_score=gt_score, pred_score=pred_score, raw_reply=reply, clamped=clamped)


def make_judge(client: ChatBackend) -> Callable[[str, str, str], JudgeVerdict]:
    def judge(question: str, gt_explanation: str, pred_explanation: str) -> JudgeVerdict:
        return judge_explanation(question, gt_explanation, pred_explanation, client)

    return judge


# --- mock -----------------------------------------------------------------

def messages_digest(messages: Sequence[Message]) -> str:
    blob = json.dumps([[m["role"], m["content"]] for m in messages], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _between(text: str, open_: str, close: str) -> str | None:
    i = text.find(open_)
    j = text.find(close, i + len(open_)) if i >= 0 else -1
    if i < 0 or j < 0:
        return None
    return text[i + len(open_) : j].strip()


def _words(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9']+", text.lower()))


def mock_judge_reply(gt: str, pred: str) -> str:
    """Reference always scores 8. The candidate scores 8 when identical to it,
    1 when empty, otherwise ``1 + round(7 * word-Jaccard)``."""
    if pred.strip() == gt.strip():
        pred_score = 8
    elif not pred.strip():
        pred_score = 1
    else:
        a, b = _words(gt), _words(pred)
        jaccard = len(a & b) / len(a | b) if a | b else 0.0
        pred_score = 1 + int(7 * jaccard + 0.5)
    return f"Mock review.\nSCORES: 8 {pred_score}"


class MockChatClient:
    """Deterministic, offline chat backend.

    Judge prompts get a ``SCORES:`` reply from :func:`mock_judge_reply`;
    RTL generation prompts get a JSON list built from the caption context
    (see ``rtl_datagen.mock_generation_reply``); anything else gets
    ``MOCK:<digest>``. ``calls`` counts requests.
    """

    def __init__(self) -> None:
        self.calls = 0
        self._lock = threading.Lock()

    def chat(self, messages: Sequence[Message]) -> str:
        _check_messages(messages)
        with self._lock:
            self.calls += 1
        system = messages[0]["content"] if messages[0]["role"] == "system" else ""
        last = messages[-1]["content"]
        if system.startswith(JUDGE_TAG):
            first_user = next(m["content"] for m in messages if m["role"] == "user")
            gt = _between(first_user, _GT_OPEN, _GT_CLOSE)
            pred = _between(first_user, _PRED_OPEN, _PRED_CLOSE)
            if gt is not None and pred is not None:
                return mock_judge_reply(gt, pred)
        from .rtl_datagen import GENERATION_TAG, mock_generation_reply

        if system.startswith(GENERATION_TAG):
            return mock_generation_reply(last)
        return f"MOCK:{messages_digest(messages)[:16]}"
