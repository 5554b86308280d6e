"""Conversation manifests: loading, validation and dialogue context lookup."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal

from speechcue.errors import (
    DuplicateUtteranceId,
    GapInTurnIndex,
    MalformedRecord,
    UnknownLabel,
    UnknownUtterance,
)
from speechcue.jsonl import iter_jsonl, write_jsonl

Split = Literal["train", "dev", "test"]
SPLITS = ("train", "dev", "test")

MANIFEST_KEYS = (
    "dataset_id",
    "dialogue_id",
    "turn_index",
    "utterance_id",
    "speaker_id",
    "speaker_group",
    "transcript",
    "label",
    "audio_path",
    "split",
)

IEMOCAP_LABELS = ("anger", "happiness", "excitement", "sadness", "frustration", "neutral")
MELD_LABELS = ("anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise")


@dataclass(frozen=True)
class Utterance:
    dataset_id: str
    dialogue_id: str
    turn_index: int
    utterance_id: str
    speaker_id: str
    speaker_group: str | None
    transcript: str
    label: str | None
    audio_path: str | None
    split: Split

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Manifest:
    utterances: tuple[Utterance, ...]
    label_set: tuple[str, ...]
    _by_id: dict[str, int] = field(init=False, repr=False, compare=False)
    _by_dialogue: dict[str, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.label_set) < 2:
            raise ValueError("label_set needs at least two labels")
        if len(set(self.label_set)) != len(self.label_set):
            raise ValueError("label_set has duplicate entries")
        by_id: dict[str, int] = {}
        by_dialogue: dict[str, list[int]] = defaultdict(list)
        allowed = set(self.label_set)
        for i, utt in enumerate(self.utterances):
            if utt.utterance_id in by_id:
                raise DuplicateUtteranceId(utt.utterance_id)
            by_id[utt.utterance_id] = i
            if utt.label and utt.label not in allowed:
                raise UnknownLabel(utt.label)
            by_dialogue[utt.dialogue_id].append(i)
        for dialogue_id, idx in by_dialogue.items():
            turns = [self.utterances[i].turn_index for i in idx]
            if sorted(turns) != list(range(len(turns))):
                raise GapInTurnIndex(dialogue_id, sorted(turns))
            by_dialogue[dialogue_id] = sorted(idx, key=lambda i: self.utterances[i].turn_index)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(
            self, "_by_dialogue", {k: tuple(v) for k, v in by_dialogue.items()}
        )

    def __len__(self) -> int:
        return len(self.utterances)

    def __contains__(self, utterance_id: object) -> bool:
        return utterance_id in self._by_id

    def get(self, utterance_id: str) -> Utterance:
        try:
            return self.utterances[self._by_id[utterance_id]]
        except KeyError:
            raise UnknownUtterance(utterance_id) from None

    def dialogue(self, dialogue_id: str) -> list[Utterance]:
        return [self.utterances[i] for i in self._by_dialogue[dialogue_id]]

    def split(self, name: str) -> list[Utterance]:
        return [u for u in self.utterances if u.split == name]


def _parse_record(lineno: int, rec: dict) -> Utterance:
    keys = set(rec)
    if "schema" in keys:
        keys.discard("schema")
    missing = [k for k in MANIFEST_KEYS if k not in keys]
    extra = sorted(keys - set(MANIFEST_KEYS))
    if missing:
        raise MalformedRecord(lineno, f"missing keys {missing}")
    if extra:
        raise MalformedRecord(lineno, f"unexpected keys {extra}")

    for key in ("dataset_id", "dialogue_id", "utterance_id", "speaker_id", "transcript"):
        if not isinstance(rec[key], str):
            raise MalformedRecord(lineno, f"{key} must be a string")
    for key in ("speaker_group", "label", "audio_path"):
        if rec[key] is not None and not isinstance(rec[key], str):
            raise MalformedRecord(lineno, f"{key} must be a string or null")
    turn = rec["turn_index"]
    if not isinstance(turn, int) or isinstance(turn, bool) or turn < 0:
        raise MalformedRecord(lineno, "turn_index must be a non-negative integer")
    if rec["split"] not in SPLITS:
        raise MalformedRecord(lineno, f"split must be one of {SPLITS}")
    if not rec["utterance_id"]:
        raise MalformedRecord(lineno, "utterance_id is empty")
    if not rec["transcript"].strip() and not rec["audio_path"]:
        raise MalformedRecord(lineno, "utterance has neither transcript nor audio")

    label = rec["label"]
    if label is not None:
        label = label.strip().lower() or None
    return Utterance(
        dataset_id=rec["dataset_id"],
        dialogue_id=rec["dialogue_id"],
        turn_index=turn,
        utterance_id=rec["utterance_id"],
        speaker_id=rec["speaker_id"],
        speaker_group=rec["speaker_group"],
        transcript=rec["transcript"],
        label=label,
        audio_path=rec["audio_path"] or None,
        split=rec["split"],
    )


def load_manifest(path: str | Path, label_set: Sequence[str] | None = None) -> Manifest:
    """Load and validate a line-delimited manifest.

    Labels are lowercased. When ``label_set`` is omitted it is inferred as the
    sorted set of labels found in the file.
    """
    utterances = []
    seen: dict[str, int] = {}
    for lineno, rec in iter_jsonl(path):
        utt = _parse_record(lineno, rec)
        if utt.utterance_id in seen:
            raise DuplicateUtteranceId(
                f"{utt.utterance_id} (lines {seen[utt.utterance_id]} and {lineno})"
            )
        seen[utt.utterance_id] = lineno
        utterances.append(utt)

    if label_set is None:
        labels = tuple(sorted({u.label for u in utterances if u.label}))
    else:
        labels = tuple(lab.strip().lower() for lab in label_set)
    allowed = set(labels)
    for utt in utterances:
        if utt.label and utt.label not in allowed:
            raise UnknownLabel(utt.label)

    utterances.sort(key=lambda u: (u.dialogue_id, u.turn_index))
    return Manifest(tuple(utterances), labels)


def dump_manifest(manifest: Manifest, path: str | Path) -> int:
    return write_jsonl(path, (u.to_record() for u in manifest.utterances))


def dialogue_context(manifest: Manifest, target: str, window: int) -> list[Utterance]:
    """Up to ``window`` preceding turns of the same dialogue, then the target itself."""
    if window < 0:
        raise ValueError("window must be non-negative")
    utt = manifest.get(target)
    turns = manifest.dialogue(utt.dialogue_id)
    start = max(0, utt.turn_index - window)
    return turns[start : utt.turn_index + 1]


def resolve_label_set(spec: str | None) -> tuple[str, ...] | None:
    """Interpret a command-line label-set argument: a dataset name or a comma list."""
    if spec is None or not spec.strip():
        return None
    key = spec.strip().lower()
    if key == "iemocap":
        return IEMOCAP_LABELS
    if key == "meld":
        return MELD_LABELS
    return tuple(s.strip().lower() for s in key.split(",") if s.strip())
