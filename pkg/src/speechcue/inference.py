"""Zero-shot classification against a chat-completion endpoint, and fine-tune record export."""

from __future__ import annotations

import logging
import os
import re
import time
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from speechcue.errors import AuthFailure, EndpointUnreachable, MissingGoldLabel
from speechcue.jsonl import PREDICTIONS, tag, write_jsonl

log = logging.getLogger(__name__)

API_KEY_ENV = "SPEECHCUE_API_KEY"

# Inflected forms generative models tend to answer with.
LABEL_ALIASES = {
    "angry": "anger",
    "happy": "happiness",
    "excited": "excitement",
    "sad": "sadness",
    "frustrated": "frustration",
    "joyful": "joy",
    "disgusted": "disgust",
    "afraid": "fear",
    "scared": "fear",
    "fearful": "fear",
    "surprised": "surprise",
}


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key: str | None = field(default_factory=lambda: os.environ.get(API_KEY_ENV), repr=False)
    timeout_s: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 4
    temperature: float = 0.0
    backoff_s: float = 1.0

    def __post_init__(self) -> None:
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass(frozen=True)
class Prediction:
    utterance_id: str
    raw_completion: str
    parsed_label: str | None
    latency_ms: float
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "schema": tag(PREDICTIONS),
            "utterance_id": self.utterance_id,
            "parsed_label": self.parsed_label,
            "raw_completion": self.raw_completion,
            "latency_ms": round(self.latency_ms, 3),
        }


def parse_label(completion: str, label_set: Sequence[str]) -> str | None:
    """Map a free-text completion onto one label, or None when it is ambiguous or absent."""
    labels = [lab.lower() for lab in label_set]
    text = completion.strip().lower()
    bare = text.strip(" \t\r\n.!?,;:'\"`*")
    if bare in labels:
        return bare

    found = {lab for lab in labels if lab in text}
    if len(found) == 1:
        return found.pop()
    if found:
        return None

    aliased = {
        LABEL_ALIASES[w]
        for w in re.findall(r"[a-z]+", text)
        if w in LABEL_ALIASES and LABEL_ALIASES[w] in labels
    }
    if len(aliased) == 1:
        return aliased.pop()
    return None


def _transient(status: int) -> bool:
    return status == 429 or status >= 500


def request_completion(
    client: httpx.Client,
    endpoint: EndpointConfig,
    prompt: str,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """POST one chat-completion request, retrying transient failures with exponential backoff."""
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    body = {
        "model": endpoint.model_name,
        "temperature": endpoint.temperature,
        "messages": [{"role": "user", "content": prompt}],
    }

    last = "no attempt made"
    for attempt in range(endpoint.max_retries + 1):
        if attempt:
            sleep(endpoint.backoff_s * 2 ** (attempt - 1))
        try:
            resp = client.post(url, json=body, headers=headers, timeout=endpoint.timeout_s)
        except httpx.TransportError as exc:
            last = f"{type(exc).__name__}: {exc}"
            log.warning("request failed (attempt %d): %s", attempt + 1, last)
            continue
        if resp.status_code in (401, 403):
            raise AuthFailure(f"{resp.status_code} from {url}")
        if _transient(resp.status_code):
            last = f"HTTP {resp.status_code}"
            log.warning("transient failure (attempt %d): %s", attempt + 1, last)
            continue
        resp.raise_for_status()
        payload = resp.json()
        return payload["choices"][0]["message"]["content"] or ""
    raise EndpointUnreachable(f"{url}: {last} after {endpoint.max_retries + 1} attempts")


def classify_zero_shot(
    prompts: Sequence[Mapping],
    endpoint: EndpointConfig,
    label_set: Sequence[str],
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[Prediction]:
    """Classify every prompt record (``utterance_id``, ``full_text``); output keeps input order.

    At most ``endpoint.max_concurrency`` requests are in flight. A completion that
    does not name a label, or a malformed response body, yields a prediction
    with ``parsed_label=None`` instead of failing the batch.
    """
    own_client = client is None
    client = client or httpx.Client()

    def one(rec: Mapping) -> Prediction:
        start = time.perf_counter()
        try:
            raw = request_completion(client, endpoint, rec["full_text"], sleep)
            error = None
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raw, error = "", f"malformed response: {exc!r}"
        except httpx.HTTPStatusError as exc:
            raw, error = "", f"HTTP {exc.response.status_code}"
        latency = 1000.0 * (time.perf_counter() - start)
        return Prediction(rec["utterance_id"], raw, parse_label(raw, label_set), latency, error)

    try:
        with ThreadPoolExecutor(max_workers=endpoint.max_concurrency) as pool:
            futures = [pool.submit(one, rec) for rec in prompts]
            try:
                return [f.result() for f in futures]
            except BaseException:
                for f in futures:
                    f.cancel()
                raise
    finally:
        if own_client:
            client.close()


def export_finetune_records(prompts: Sequence[Mapping], out: str | Path) -> int:
    """Write ``{"prompt", "completion"}`` pairs for external instruction tuning."""
    for rec in prompts:
        if not rec.get("gold_label"):
            raise MissingGoldLabel(rec.get("utterance_id", "?"))
    return write_jsonl(
        out, ({"prompt": rec["full_text"], "completion": rec["gold_label"]} for rec in prompts)
    )
