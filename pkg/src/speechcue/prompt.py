"""Assemble emotion-recognition prompts from dialogue context and speech annotations."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

from speechcue.corpus import IEMOCAP_LABELS, MELD_LABELS, Manifest, Utterance, dialogue_context
from speechcue.describe import Annotation, describe_features, pitch_suffix, volume_suffix
from speechcue.errors import MissingAnnotation
from speechcue.jsonl import PROMPTS, tag

Mode = Literal["text_only", "with_description", "with_impression", "speech_only"]
ContextFeature = Literal["none", "pitch", "volume", "all"]
MODES: tuple[str, ...] = ("text_only", "with_description", "with_impression", "speech_only")

DEFAULT_INSTRUCTION = "You are an expert in sentiment and emotion analysis."

# {labels} is filled with a comma-separated label list.
QUESTIONS = {
    "text_only": (
        "Considering the conversational context, select exactly one emotion label "
        "for the last utterance from: {labels}. Answer with the label only."
    ),
    "with_speech": (
        "Considering both the conversational context and the described speech "
        "characteristics, select exactly one emotion label for the last utterance "
        "from: {labels}. Answer with the label only."
    ),
    "speech_only": (
        "Considering the described speech characteristics, select exactly one emotion "
        "label for the utterance from: {labels}. Answer with the label only."
    ),
}


@dataclass(frozen=True)
class PromptConfig:
    mode: Mode = "with_description"
    context_window: int = 12
    context_feature: ContextFeature = "pitch"
    context_depth: int = 3
    # which annotation the speech_only mode shows
    speech_only_source: Literal["description", "impression"] = "description"
    instruction: str = DEFAULT_INSTRUCTION

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.context_feature not in ("none", "pitch", "volume", "all"):
            raise ValueError(f"unknown context_feature {self.context_feature!r}")
        if self.context_window < 0 or self.context_depth < 0:
            raise ValueError("context sizes must be non-negative")
        if self.context_depth > self.context_window:
            raise ValueError("context_depth cannot exceed context_window")


@dataclass(frozen=True)
class PromptBundle:
    instruction: str
    context_block: str
    speech_block: str
    question: str

    @property
    def full_text(self) -> str:
        blocks = (self.instruction, self.context_block, self.speech_block, self.question)
        return "\n\n".join(b for b in blocks if b)


def label_set_for(dataset: str, manifest: Manifest | None = None) -> tuple[str, ...]:
    key = dataset.lower()
    if key == "iemocap":
        return IEMOCAP_LABELS
    if key == "meld":
        return MELD_LABELS
    if manifest is None:
        raise ValueError(f"dataset {dataset!r} needs a manifest to supply its labels")
    return manifest.label_set


def question_text(kind: str, label_set: Sequence[str]) -> str:
    return QUESTIONS[kind].format(labels=", ".join(label_set))


def _annotation(annotations: Mapping[str, Annotation], uid: str) -> Annotation:
    try:
        return annotations[uid]
    except KeyError:
        raise MissingAnnotation(uid) from None


def _context_note(ann: Annotation, feature: str) -> str:
    if feature == "pitch":
        return pitch_suffix(ann.features)
    if feature == "volume":
        return volume_suffix(ann.features)
    return describe_features(ann.features).text


def _line(utt: Utterance) -> str:
    return f"{utt.speaker_id}: {utt.transcript.strip()}"


def build_prompt(
    manifest: Manifest,
    target: str,
    annotations: Mapping[str, Annotation],
    config: PromptConfig | None = None,
) -> PromptBundle:
    cfg = config or PromptConfig()
    if cfg.mode == "speech_only":
        manifest.get(target)
        return build_speech_only_prompt(
            _annotation(annotations, target),
            manifest.label_set,
            cfg.speech_only_source,
            cfg.instruction,
        )

    turns = dialogue_context(manifest, target, cfg.context_window)
    *before, current = turns
    annotate_from = len(before) - cfg.context_depth
    lines = []
    for i, utt in enumerate(before):
        line = _line(utt)
        if cfg.mode != "text_only" and cfg.context_feature != "none" and i >= annotate_from:
            note = _context_note(_annotation(annotations, utt.utterance_id), cfg.context_feature)
            line = f"{line} ({note})"
        lines.append(line)
    lines.append(_line(current))

    speech_block = ""
    if cfg.mode == "with_description":
        ann = _annotation(annotations, target)
        speech_block = f"Speech characteristics of the last utterance: {ann.description}."
    elif cfg.mode == "with_impression":
        ann = _annotation(annotations, target)
        speech_block = f"Speech impression of the last utterance: {ann.impression}"

    kind = "text_only" if cfg.mode == "text_only" else "with_speech"
    return PromptBundle(
        instruction=cfg.instruction,
        context_block="\n".join(lines),
        speech_block=speech_block,
        question=question_text(kind, manifest.label_set),
    )


def build_speech_only_prompt(
    annotation: Annotation | None,
    label_set: Sequence[str],
    source: Literal["description", "impression"] = "description",
    instruction: str = DEFAULT_INSTRUCTION,
) -> PromptBundle:
    """Prompt carrying only the target's speech annotation; no transcript appears."""
    if annotation is None:
        raise MissingAnnotation("speech-only prompts need an annotation")
    if source == "description":
        speech = f"Speech characteristics of the utterance: {annotation.description}."
    else:
        speech = f"Speech impression of the utterance: {annotation.impression}"
    return PromptBundle(instruction, "", speech, question_text("speech_only", label_set))


def prompt_record(manifest: Manifest, target: str, bundle: PromptBundle, mode: str) -> dict:
    return {
        "schema": tag(PROMPTS),
        "utterance_id": target,
        "mode": mode,
        "full_text": bundle.full_text,
        "gold_label": manifest.get(target).label,
    }
