from __future__ import annotations

import json
import threading
import time

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechcue.corpus import IEMOCAP_LABELS, MELD_LABELS
from speechcue.errors import AuthFailure, EndpointUnreachable, MissingGoldLabel
from speechcue.inference import (
    API_KEY_ENV,
    LABEL_ALIASES,
    EndpointConfig,
    classify_zero_shot,
    export_finetune_records,
    parse_label,
)
from support import ScriptedEndpoint, serve


def prompts(n: int) -> list[dict]:
    return [{"utterance_id": f"u{i}", "full_text": f"prompt {i}", "gold_label": "neutral"} for i in range(n)]


def reply(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def mock_client(handler) -> httpx.Client:
    return httpx.Client(transport=httpx.MockTransport(handler))


def endpoint(**kw) -> EndpointConfig:
    kw.setdefault("api_key", "test-key")
    return EndpointConfig("http://mock/v1", "m", **kw)


# ---------------------------------------------------------------- parsing


@pytest.mark.parametrize(
    "completion,expected",
    [
        ("Anger", "anger"),
        ("  NEUTRAL.\n", "neutral"),
        ("The emotion is: Sadness.", "sadness"),
        ("either happiness or sadness", None),
        ("cheerful", None),
        ("", None),
        ("frustrated", "frustration"),
        ("He sounds angry.", "anger"),
        ("happy or sad", None),
        ("**excitement**", "excitement"),
    ],
)
def test_parse_label_iemocap(completion, expected):
    assert parse_label(completion, IEMOCAP_LABELS) == expected


def test_alias_needs_label_in_set():
    assert parse_label("joyful", MELD_LABELS) == "joy"
    assert parse_label("joyful", IEMOCAP_LABELS) is None
    assert parse_label("scared", MELD_LABELS) == "fear"


def test_exact_match_wins_over_substring():
    # "sadness" contains "sad", which is no label; exact match is checked first anyway
    assert parse_label("sadness", ("sadness", "sad")) == "sadness"


def oracle_parse(text, labels):
    """Rule-by-rule reference: exact, then unique substring, then unique alias."""
    t = text.strip().lower()
    bare = t.strip(" \t\r\n.!?,;:'\"`*")
    if bare in labels:
        return bare
    hits = [lab for lab in labels if lab in t]
    if len(hits) == 1:
        return hits[0]
    if hits:
        return None
    words = "".join(c if c.isalpha() else " " for c in t).split()
    aliased = sorted({LABEL_ALIASES[w] for w in words if w in LABEL_ALIASES and LABEL_ALIASES[w] in labels})
    return aliased[0] if len(aliased) == 1 else None


_pieces = st.sampled_from(
    [*IEMOCAP_LABELS, *LABEL_ALIASES, "The", "emotion", "is", ":", ".", "Label", "ANGER", "Sad", "maybe", "or"]
)


@settings(max_examples=300, deadline=None)
@given(st.lists(_pieces, max_size=5).map(" ".join))
def test_parse_matches_oracle(text):
    got = parse_label(text, IEMOCAP_LABELS)
    assert got == oracle_parse(text, IEMOCAP_LABELS)
    assert got is None or got in IEMOCAP_LABELS


# ---------------------------------------------------------------- batch driver (mock transport)


def test_echo_neutral_and_order():
    seen = []

    def handler(request):
        body = json.loads(request.content)
        seen.append(body)
        return reply("neutral")

    preds = classify_zero_shot(prompts(7), endpoint(), IEMOCAP_LABELS, client=mock_client(handler))
    assert [p.utterance_id for p in preds] == [f"u{i}" for i in range(7)]
    assert all(p.parsed_label == "neutral" for p in preds)
    assert seen[0]["model"] == "m" and seen[0]["temperature"] == 0.0
    assert seen[0]["messages"][0]["role"] == "user"


def test_out_of_set_is_unparseable_but_batch_completes():
    def handler(request):
        text = json.loads(request.content)["messages"][0]["content"]
        return reply("cheerful" if text.endswith("3") else "Anger")

    preds = classify_zero_shot(prompts(6), endpoint(), IEMOCAP_LABELS, client=mock_client(handler))
    assert len(preds) == 6
    assert [p.parsed_label for p in preds] == ["anger"] * 3 + [None] + ["anger"] * 2
    assert preds[3].raw_completion == "cheerful"


def test_malformed_body_is_per_item():
    def handler(request):
        text = json.loads(request.content)["messages"][0]["content"]
        if text.endswith("1"):
            return httpx.Response(200, json={"unexpected": True})
        if text.endswith("2"):
            return httpx.Response(404, text="no such model")
        return reply("sad")

    preds = classify_zero_shot(prompts(4), endpoint(), IEMOCAP_LABELS, client=mock_client(handler))
    assert [p.parsed_label for p in preds] == ["sadness", None, None, "sadness"]
    assert preds[1].error.startswith("malformed response")
    assert preds[2].error == "HTTP 404"


def test_retry_on_503_with_backoff():
    attempts = {}
    sleeps = []

    def handler(request):
        key = json.loads(request.content)["messages"][0]["content"]
        attempts[key] = attempts.get(key, 0) + 1
        if attempts[key] <= 2:
            return httpx.Response(503)
        return reply("excited")

    cfg = endpoint(max_retries=3, backoff_s=0.5, max_concurrency=1)
    preds = classify_zero_shot(prompts(2), cfg, IEMOCAP_LABELS, client=mock_client(handler), sleep=sleeps.append)
    assert [p.parsed_label for p in preds] == ["excitement"] * 2
    assert attempts == {"prompt 0": 3, "prompt 1": 3}
    assert sleeps == [0.5, 1.0, 0.5, 1.0]


def test_transport_errors_exhaust_into_unreachable():
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    with pytest.raises(EndpointUnreachable):
        classify_zero_shot(prompts(3), endpoint(max_retries=2), IEMOCAP_LABELS, client=mock_client(handler), sleep=lambda s: None)


def test_persistent_503_is_unreachable():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503)

    with pytest.raises(EndpointUnreachable):
        classify_zero_shot(
            prompts(1), endpoint(max_retries=2), IEMOCAP_LABELS, client=mock_client(handler), sleep=lambda s: None
        )
    assert len(calls) == 3


@pytest.mark.parametrize("status", [401, 403])
def test_auth_failure(status):
    with pytest.raises(AuthFailure):
        classify_zero_shot(prompts(2), endpoint(), IEMOCAP_LABELS, client=mock_client(lambda r: httpx.Response(status)))


def test_bearer_key_from_environment(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "secret-123")
    headers = []

    def handler(request):
        headers.append(request.headers.get("authorization"))
        return reply("neutral")

    cfg = EndpointConfig("http://mock/v1", "m")
    classify_zero_shot(prompts(1), cfg, IEMOCAP_LABELS, client=mock_client(handler))
    assert headers == ["Bearer secret-123"]
    assert "secret-123" not in repr(cfg)


def test_no_key_sends_no_header(monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    headers = []

    def handler(request):
        headers.append(request.headers.get("authorization"))
        return reply("neutral")

    classify_zero_shot(prompts(1), EndpointConfig("http://mock/v1", "m"), IEMOCAP_LABELS, client=mock_client(handler))
    assert headers == [None]


@pytest.mark.parametrize("limit", [1, 3])
def test_concurrency_bound(limit):
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}

    def handler(request):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.01)
        with lock:
            state["now"] -= 1
        return reply("neutral")

    preds = classify_zero_shot(prompts(24), endpoint(max_concurrency=limit), IEMOCAP_LABELS, client=mock_client(handler))
    assert len(preds) == 24
    assert 1 <= state["peak"] <= limit
    if limit > 1:
        assert state["peak"] > 1


def test_config_validation():
    with pytest.raises(ValueError):
        endpoint(max_concurrency=0)
    with pytest.raises(ValueError):
        endpoint(max_retries=-1)


# ---------------------------------------------------------------- real HTTP round trip


def test_wire_protocol_against_local_server(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "wire-key")
    server = ScriptedEndpoint(lambda prompt, n: (503, "{}") if n == 1 else "The emotion is: Sadness.", delay_s=0.02)
    with serve(server) as url:
        cfg = EndpointConfig(url, "tiny-model", max_concurrency=2, backoff_s=0.0)
        preds = classify_zero_shot(prompts(6), cfg, IEMOCAP_LABELS)
    assert [p.parsed_label for p in preds] == ["sadness"] * 6
    assert server.calls == 7
    assert server.peak <= 2
    assert set(server.auth_headers) == {"Bearer wire-key"}
    assert server.bodies[0]["model"] == "tiny-model"
    assert all(p.latency_ms >= 0 for p in preds)


def test_unreachable_host():
    cfg = EndpointConfig("http://127.0.0.1:9/v1", "m", max_retries=1, backoff_s=0.0, timeout_s=2.0)
    with pytest.raises(EndpointUnreachable):
        classify_zero_shot(prompts(1), cfg, IEMOCAP_LABELS)


# ---------------------------------------------------------------- export


def test_export_round_trip_and_idempotence(tmp_path):
    recs = prompts(3)
    assert export_finetune_records(recs, tmp_path / "a.jsonl") == 3
    export_finetune_records(recs, tmp_path / "b.jsonl")
    lines = (tmp_path / "a.jsonl").read_text().splitlines()
    assert [json.loads(line) for line in lines] == [{"prompt": r["full_text"], "completion": "neutral"} for r in recs]
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_export_requires_gold(tmp_path):
    recs = prompts(3)
    recs[1]["gold_label"] = None
    with pytest.raises(MissingGoldLabel) as err:
        export_finetune_records(recs, tmp_path / "x.jsonl")
    assert "u1" in str(err.value)
    assert not (tmp_path / "x.jsonl").exists()
