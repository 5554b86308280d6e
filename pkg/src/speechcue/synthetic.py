"""Deterministic synthetic data: a small voiced-tone conversation corpus and prototype feature draws.

The bundled corpus under ``data/synthetic`` is produced by :func:`write_corpus`.
Each utterance is a harmonic tone whose level, pitch contour and duration
follow a per-emotion prototype, so the pipeline has real signal to pick up.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from speechcue.corpus import IEMOCAP_LABELS, MANIFEST_KEYS
from speechcue.dsp import AudioClip, write_wav
from speechcue.jsonl import write_jsonl

SAMPLE_RATE = 16_000


@dataclass(frozen=True)
class Prototype:
    amplitude: float  # peak amplitude of the voiced tone
    tremolo: float  # relative depth of slow amplitude modulation
    pitch_scale: float  # multiplier on the speaker's base F0
    pitch_swing: float  # relative depth of the F0 contour
    rate_wps: float


PROTOTYPES = {
    "anger": Prototype(0.50, 0.55, 1.20, 0.10, 3.4),
    "happiness": Prototype(0.32, 0.30, 1.30, 0.16, 3.0),
    "excitement": Prototype(0.45, 0.45, 1.40, 0.20, 3.7),
    "sadness": Prototype(0.07, 0.10, 0.85, 0.02, 1.6),
    "frustration": Prototype(0.28, 0.40, 1.05, 0.06, 2.7),
    "neutral": Prototype(0.14, 0.12, 1.00, 0.03, 2.2),
}

SPEAKERS = {"ava": ("F", 205.0), "ben": ("M", 115.0), "cora": ("F", 225.0), "dev": ("M", 128.0)}

# (dialogue_id, split, [(speaker, label, transcript), ...])
DIALOGUES = [
    (
        "dlg01",
        "train",
        [
            ("ava", "neutral", "I picked up the groceries on the way home"),
            ("ben", "neutral", "Thanks, did they have the bread we like"),
            ("ava", "frustration", "No, they were out again, third week in a row"),
            ("ben", "anger", "That is ridiculous, I am calling the manager tomorrow"),
            ("ava", "sadness", "It does not matter much anymore"),
            ("ben", "neutral", "Okay, we can try the other shop instead"),
        ],
    ),
    (
        "dlg02",
        "train",
        [
            ("ben", "excitement", "Guess what, I got the job offer this morning"),
            ("ava", "happiness", "That is wonderful news, I am so glad for you"),
            ("ben", "excitement", "They want me to start in two weeks"),
            ("ava", "neutral", "We should look at the commute before then"),
            ("ben", "happiness", "Sure, let us plan it over dinner"),
            ("ava", "happiness", "I will cook something nice tonight"),
        ],
    ),
    (
        "dlg03",
        "train",
        [
            ("cora", "neutral", "The train was delayed by twenty minutes"),
            ("dev", "frustration", "Again, this keeps happening every single day"),
            ("cora", "sadness", "I missed the start of the meeting because of it"),
            ("dev", "anger", "They never tell anyone anything, it is unacceptable"),
            ("cora", "neutral", "I wrote to the company about it"),
            ("dev", "frustration", "I doubt they will even reply to you"),
        ],
    ),
    (
        "dlg04",
        "test",
        [
            ("dev", "happiness", "My sister is visiting next weekend"),
            ("cora", "excitement", "Really, we could take her to the festival"),
            ("dev", "neutral", "Maybe, she usually prefers quiet places"),
            ("cora", "sadness", "I was hoping we could all go together"),
            ("dev", "anger", "Stop making plans for everyone without asking"),
            ("cora", "frustration", "I was only trying to help out"),
        ],
    ),
]


def synthesize(
    proto: Prototype, base_f0: float, words: int, rng: np.random.Generator
) -> AudioClip:
    """Voiced harmonic tone shaped by one emotion prototype, with small seeded jitter."""
    rate = proto.rate_wps * rng.uniform(0.92, 1.08)
    duration = max(words / rate, 0.6)
    n = int(round(duration * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE

    f0_mean = base_f0 * proto.pitch_scale * rng.uniform(0.96, 1.04)
    contour = 1.0 + proto.pitch_swing * np.sin(2 * np.pi * 1.7 * t + rng.uniform(0, 2 * np.pi))
    f0 = f0_mean * contour
    phase = 2 * np.pi * np.cumsum(f0) / SAMPLE_RATE
    tone = np.sin(phase) + 0.5 * np.sin(2 * phase) + 0.25 * np.sin(3 * phase)
    tone /= 1.75

    envelope = 1.0 + proto.tremolo * np.sin(2 * np.pi * 2.3 * t + rng.uniform(0, 2 * np.pi))
    envelope /= 1.0 + proto.tremolo
    fade = np.minimum(1.0, np.minimum(t, duration - t) / 0.02)
    amp = proto.amplitude * rng.uniform(0.9, 1.1)
    x = amp * envelope * fade * tone + rng.normal(0.0, 3e-4, n)
    return AudioClip(np.clip(x, -0.99, 0.99), SAMPLE_RATE)


def corpus_records() -> list[dict]:
    records = []
    for dialogue_id, split, turns in DIALOGUES:
        for turn, (speaker, label, text) in enumerate(turns):
            uid = f"{dialogue_id}_u{turn}"
            records.append(
                {
                    "dataset_id": "synthetic",
                    "dialogue_id": dialogue_id,
                    "turn_index": turn,
                    "utterance_id": uid,
                    "speaker_id": speaker,
                    "speaker_group": SPEAKERS[speaker][0],
                    "transcript": text,
                    "label": label,
                    "audio_path": f"wav/{uid}.wav",
                    "split": split,
                }
            )
    assert all(tuple(r) == MANIFEST_KEYS for r in records)
    return records


def write_corpus(root: str | Path, seed: int = 7) -> Path:
    """Write ``manifest.jsonl`` and ``wav/*.wav`` under ``root``; returns the manifest path."""
    root = Path(root)
    (root / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = corpus_records()
    for rec in records:
        _, base = SPEAKERS[rec["speaker_id"]]
        clip = synthesize(PROTOTYPES[rec["label"]], base, len(rec["transcript"].split()), rng)
        write_wav(root / rec["audio_path"], clip)
    manifest = root / "manifest.jsonl"
    write_jsonl(manifest, records)
    return manifest


# Mean standardized feature values per emotion, in FEATURES order
# (avg_volume, volume_variation, avg_pitch, pitch_variation, speaking_rate).
FEATURE_PROTOTYPES = {
    "anger": (1.2, 1.0, 0.4, 0.3, 0.8),
    "happiness": (0.4, 0.2, 0.9, 0.8, 0.3),
    "excitement": (1.0, 0.6, 1.2, 1.2, 1.2),
    "sadness": (-1.3, -0.8, -0.9, -1.0, -1.2),
    "frustration": (0.5, 0.9, -0.2, -0.3, 0.1),
    "neutral": (-0.5, -0.7, -0.3, -0.6, -0.3),
}


def prototype_dataset(
    n: int, seed: int = 0, noise: float = 0.8, labels: tuple[str, ...] = IEMOCAP_LABELS
) -> tuple[np.ndarray, list[str]]:
    """Draw ``n`` labelled feature vectors as emotion prototype plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    y = [labels[i] for i in rng.integers(0, len(labels), n)]
    centers = np.asarray([FEATURE_PROTOTYPES[lab] for lab in y])
    return centers + rng.normal(0.0, noise, centers.shape), y
