"""Shared fixtures-as-functions for the test suite: signals, manifests, a scripted endpoint."""

from __future__ import annotations

import json
import threading
from collections.abc import Callable
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from speechcue.dsp import AudioClip

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "data" / "synthetic"
GOLDEN = Path(__file__).resolve().parent / "golden"


def sine(freq: float, seconds: float = 1.0, amp: float = 0.5, sr: int = 16_000, phase: float = 0.0) -> AudioClip:
    t = np.arange(int(round(seconds * sr))) / sr
    return AudioClip(amp * np.sin(2 * np.pi * freq * t + phase), sr)


def two_plateau(sr: int = 16_000) -> AudioClip:
    """200 Hz tone, 2 s at RMS 0.1 (-20 dB) then 2 s at RMS 0.01 (-40 dB)."""
    t = np.arange(2 * sr) / sr
    tone = np.sin(2 * np.pi * 200.0 * t)
    loud = 0.1 * np.sqrt(2) * tone
    quiet = 0.01 * np.sqrt(2) * tone
    return AudioClip(np.concatenate([loud, quiet]), sr)


def record(dialogue: str, turn: int, **over) -> dict:
    rec = {
        "dataset_id": "unit",
        "dialogue_id": dialogue,
        "turn_index": turn,
        "utterance_id": f"{dialogue}_u{turn}",
        "speaker_id": "s1" if turn % 2 == 0 else "s2",
        "speaker_group": None,
        "transcript": f"turn {turn} words here",
        "label": "neutral",
        "audio_path": None,
        "split": "train",
    }
    rec.update(over)
    return rec


def write_lines(path: Path, records: list) -> Path:
    lines = [r if isinstance(r, str) else json.dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class ScriptedEndpoint:
    """Local chat-completion server whose reply is computed by ``script(prompt, call_no)``.

    ``script`` returns either a completion string or an ``(http_status, body)`` tuple.
    Tracks the peak number of simultaneously open requests.
    """

    def __init__(self, script: Callable[[str, int], object], delay_s: float = 0.0):
        self.script = script
        self.delay_s = delay_s
        self.calls = 0
        self.in_flight = 0
        self.peak = 0
        self.auth_headers: list[str | None] = []
        self.bodies: list[dict] = []
        self._lock = threading.Lock()

    def handle(self, body: dict, auth: str | None) -> tuple[int, dict | str]:
        with self._lock:
            self.calls += 1
            call_no = self.calls
            self.in_flight += 1
            self.peak = max(self.peak, self.in_flight)
            self.auth_headers.append(auth)
            self.bodies.append(body)
        try:
            if self.delay_s:
                threading.Event().wait(self.delay_s)
            out = self.script(body["messages"][0]["content"], call_no)
        finally:
            with self._lock:
                self.in_flight -= 1
        if isinstance(out, tuple):
            return out
        return 200, {"choices": [{"message": {"role": "assistant", "content": out}}]}


@contextmanager
def serve(endpoint: ScriptedEndpoint):
    """Run ``endpoint`` on an ephemeral localhost port; yields its base URL."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802
            if self.path != "/v1/chat/completions":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
            status, payload = endpoint.handle(body, self.headers.get("Authorization"))
            data = (payload if isinstance(payload, str) else json.dumps(payload)).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}/v1"
    finally:
        server.shutdown()
        server.server_close()


def keyword_oracle(prompt: str, _call: int) -> str:
    """Deterministic stand-in model: guesses from the speech annotation's wording."""
    text = prompt.lower()
    if "speaking loudly" in text or "high volume" in text:
        return "Anger"
    if "talking slowly" in text or "low speaking rate" in text:
        return "sadness."
    if "higher pitch" in text:
        return "The emotion is: happiness"
    return "neutral"
