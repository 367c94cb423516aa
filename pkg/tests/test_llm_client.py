import json
import threading
import time

import httpx
import pytest

from tloc.errors import AuthError, MalformedReply, RateLimited, Timeout, UnparseableVerdict
from tloc.llm_client import (
    ENV_API_KEY,
    ENV_ENDPOINT,
    ENV_MODEL,
    ChatClient,
    ChatConfig,
    MockChatClient,
    judge_explanation,
    judge_messages,
    parse_scores,
)

MSGS = [{"role": "user", "content": "hi"}]


def ok(content):
    return httpx.Response(200, json={"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]})


def client_with(handler, **cfg):
    config = ChatConfig("http://judge.test/v1/chat/completions", "m", api_key="sk-test", **{"backoff_base": 0.0, **cfg})
    sleeps = []
    return ChatClient(config, transport=httpx.MockTransport(handler), sleep=sleeps.append), sleeps


def test_wire_format():
    seen = {}

    def handler(request):
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return ok("hello")

    client, _ = client_with(handler, temperature=0.3)
    assert client.chat(MSGS) == "hello"
    assert seen["body"] == {"model": "m", "messages": MSGS, "temperature": 0.3}
    assert seen["auth"] == "Bearer sk-test"


def test_retries_then_succeeds():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(429) if len(calls) < 3 else ok("fine")

    client, sleeps = client_with(handler, max_retries=3, backoff_base=0.5)
    assert client.chat(MSGS) == "fine"
    assert len(calls) == 3
    assert sleeps == [0.5, 1.0]


def test_500_thrice_exhausts_two_retries():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    client, _ = client_with(handler, max_retries=2)
    with pytest.raises(RateLimited):
        client.chat(MSGS)
    assert len(calls) == 3


def test_timeout_exhaustion():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    client, _ = client_with(handler, max_retries=1)
    with pytest.raises(Timeout):
        client.chat(MSGS)


@pytest.mark.parametrize("status", [401, 403])
def test_auth_error_not_retried(status):
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(status)

    client, _ = client_with(handler, max_retries=5)
    with pytest.raises(AuthError):
        client.chat(MSGS)
    assert len(calls) == 1


@pytest.mark.parametrize("body", [{"choices": []}, {"nope": 1}, {"choices": [{"message": {"content": 3}}]}])
def test_malformed_reply(body):
    client, _ = client_with(lambda r: httpx.Response(200, json=body))
    with pytest.raises(MalformedReply):
        client.chat(MSGS)


def test_empty_messages_rejected():
    client, _ = client_with(lambda r: ok("x"))
    with pytest.raises(ValueError):
        client.chat([])
    with pytest.raises(ValueError):
        MockChatClient().chat([])


def test_bounded_concurrency():
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}

    def handler(request):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.02)
        with lock:
            state["now"] -= 1
        return ok("x")

    client, _ = client_with(handler, max_concurrency=2)
    threads = [threading.Thread(target=client.chat, args=(MSGS,)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert state["peak"] <= 2


def test_config_from_env():
    env = {ENV_ENDPOINT: "http://x", ENV_MODEL: "judge-model", ENV_API_KEY: "secret"}
    cfg = ChatConfig.from_env(env, max_retries=1)
    assert (cfg.endpoint_url, cfg.model_name, cfg.api_key, cfg.max_retries) == ("http://x", "judge-model", "secret", 1)
    assert "secret" not in repr(cfg)
    with pytest.raises(AuthError):
        ChatConfig.from_env({})


def test_config_validation():
    with pytest.raises(ValueError):
        ChatConfig("u", "m", max_retries=-1)
    with pytest.raises(ValueError):
        ChatConfig("u", "m", max_concurrency=0)


def test_mock_is_deterministic(no_network):
    a, b = MockChatClient(), MockChatClient()
    msgs = [{"role": "user", "content": "anything at all"}]
    assert a.chat(msgs) == b.chat(msgs)
    assert a.chat(msgs).startswith("MOCK:")
    assert a.chat(msgs) != a.chat([{"role": "user", "content": "other"}])


def test_judge_prompt_contents():
    system, user = judge_messages("When?", "ref", "cand")
    text = system["content"].lower()
    for word in ("helpfulness", "relevance", "accuracy", "level of details", "ignore any timestamps", "scores:"):
        assert word in text
    assert "ref" in user["content"] and "cand" in user["content"]


def test_mock_judge_identical_and_empty(no_network):
    mock = MockChatClient()
    same = judge_explanation("When?", "She sleeps.", "She sleeps.", mock)
    assert (same.gt_score, same.pred_score) == (8, 8)
    assert 100 * same.relative == 100.0
    empty = judge_explanation("When?", "She sleeps.", "", mock)
    assert (empty.gt_score, empty.pred_score) == (8, 1)
    assert 100 * empty.relative == 12.5


class Scripted:
    def __init__(self, *replies):
        self.replies = list(replies)
        self.seen = []

    def chat(self, messages):
        self.seen.append(list(messages))
        return self.replies.pop(0)


def test_judge_reasks_once():
    backend = Scripted("I like both.", "SCORES: 9 6")
    v = judge_explanation("q", "g", "p", backend)
    assert (v.gt_score, v.pred_score) == (9, 6)
    assert len(backend.seen) == 2 and backend.seen[1][-2]["content"] == "I like both."


def test_judge_unparseable_after_retry():
    with pytest.raises(UnparseableVerdict):
        judge_explanation("q", "g", "p", Scripted("nope", "still nope"))


def test_scores_clamped_and_flagged():
    v = judge_explanation("q", "g", "p", Scripted("SCORES: 12 0"))
    assert (v.gt_score, v.pred_score, v.clamped) == (10, 1, True)
    assert parse_scores("a\nSCORES: 3 4\nSCORES: 5 6") == (5, 6, False)
