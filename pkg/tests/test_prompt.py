from __future__ import annotations

import json
import re

import pytest

from speechcue.corpus import IEMOCAP_LABELS, MELD_LABELS, Manifest, dialogue_context, load_manifest
from speechcue.describe import Annotation, CategorizedFeatures
from speechcue.errors import MissingAnnotation, UnknownUtterance
from speechcue.pipeline import run_pipeline
from speechcue.prompt import (
    DEFAULT_INSTRUCTION,
    MODES,
    PromptBundle,
    PromptConfig,
    build_prompt,
    build_speech_only_prompt,
    label_set_for,
    question_text,
)
from speechcue.thresholds import LEVEL_NAMES, CategorizedFeature, CategoryLevel
from support import CORPUS, GOLDEN, record, write_lines

SPEECH_WORDS = ("pitch", "volume", "speaking rate")


def annotation(uid: str, level: str = "medium", k: int = 5) -> Annotation:
    c = CategorizedFeature(CategoryLevel(LEVEL_NAMES[k].index(level), level), 0.5)
    return Annotation.build(uid, k, CategorizedFeatures(c, c, c, c, c))


@pytest.fixture
def dialogue(tmp_path) -> Manifest:
    recs = [record("d1", i, transcript=f"line number {i}") for i in range(8)]
    return load_manifest(write_lines(tmp_path / "m.jsonl", recs), IEMOCAP_LABELS)


@pytest.fixture
def annotations(dialogue) -> dict[str, Annotation]:
    return {u.utterance_id: annotation(u.utterance_id, "high" if u.turn_index % 2 else "low") for u in dialogue.utterances}


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory):
    return run_pipeline(CORPUS, tmp_path_factory.mktemp("pipe"))


# ---------------------------------------------------------------- goldens


@pytest.mark.parametrize("mode", MODES)
def test_golden_prompts(pipeline_out, mode):
    produced = pipeline_out[f"prompts_{mode}"].read_bytes()
    assert produced == (GOLDEN / f"prompts_{mode}.jsonl").read_bytes()


def test_golden_finetune_export(pipeline_out):
    assert pipeline_out["finetune"].read_bytes() == (GOLDEN / "finetune_with_description.jsonl").read_bytes()


def _golden(mode):
    return [json.loads(line) for line in (GOLDEN / f"prompts_{mode}.jsonl").read_text().splitlines()]


def test_golden_text_only_has_no_speech_vocabulary():
    for rec in _golden("text_only"):
        lowered = rec["full_text"].lower()
        assert not any(word in lowered for word in SPEECH_WORDS), rec["utterance_id"]


def test_golden_last_three_context_lines_annotated():
    manifest = load_manifest(CORPUS / "manifest.jsonl", IEMOCAP_LABELS)
    for rec in _golden("with_description"):
        n_before = len(dialogue_context(manifest, rec["utterance_id"], 12)) - 1
        context = rec["full_text"].split("\n\n")[1].splitlines()
        flags = [line.endswith(")") and "(pitch: " in line for line in context]
        assert flags == [False] * max(0, n_before - 3) + [True] * min(3, n_before) + [False]


def test_golden_speech_only_has_no_transcript():
    manifest = load_manifest(CORPUS / "manifest.jsonl", IEMOCAP_LABELS)
    for rec in _golden("speech_only"):
        words = set(re.findall(r"[a-z]+", manifest.get(rec["utterance_id"]).transcript.lower()))
        text_words = set(re.findall(r"[a-z]+", rec["full_text"].lower()))
        # function words may occur in the fixed wording; content words must not
        leaked = {w for w in words & text_words if len(w) > 4}
        assert not leaked, (rec["utterance_id"], leaked)


# ---------------------------------------------------------------- assembly rules


def test_text_only_has_three_blocks(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u4", annotations, PromptConfig(mode="text_only"))
    assert b.speech_block == ""
    assert b.full_text.count("\n\n") == 2
    assert b.full_text == "\n\n".join([b.instruction, b.context_block, b.question])
    assert not any(w in b.full_text.lower() for w in SPEECH_WORDS)


def test_text_only_needs_no_annotations(dialogue):
    b = build_prompt(dialogue, "d1_u4", {}, PromptConfig(mode="text_only"))
    assert b.context_block.splitlines()[-1] == "s1: line number 4"


def test_last_three_get_pitch_suffix(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u7", annotations, PromptConfig(mode="with_description"))
    lines = b.context_block.splitlines()
    assert len(lines) == 8
    assert lines[:4] == [f"{'s1' if i % 2 == 0 else 's2'}: line number {i}" for i in range(4)]
    assert lines[4] == "s1: line number 4 (pitch: low with low variation)"
    assert lines[5] == "s2: line number 5 (pitch: high with high variation)"
    assert lines[6] == "s1: line number 6 (pitch: low with low variation)"
    assert lines[7] == "s2: line number 7"
    assert b.speech_block == (
        "Speech characteristics of the last utterance: high volume with high variation; "
        "high pitch with high variation; high speaking rate."
    )


@pytest.mark.parametrize("feature,marker", [("volume", "(volume: "), ("all", "volume with")])
def test_other_context_features(dialogue, annotations, feature, marker):
    b = build_prompt(dialogue, "d1_u5", annotations, PromptConfig(context_feature=feature, context_depth=2))
    lines = b.context_block.splitlines()
    assert [marker in line for line in lines] == [False, False, False, True, True, False]


def test_context_feature_none(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u5", annotations, PromptConfig(context_feature="none"))
    assert "(" not in b.context_block


def test_first_turn_context_is_target_only(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u0", annotations, PromptConfig(context_window=12))
    assert b.context_block == "s1: line number 0"


def test_window_limits_context(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u7", annotations, PromptConfig(context_window=3, context_depth=3))
    assert len(b.context_block.splitlines()) == 4


def test_impression_block(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u2", annotations, PromptConfig(mode="with_impression"))
    assert b.speech_block == "Speech impression of the last utterance: " + annotations["d1_u2"].impression
    assert b.speech_block.endswith(".")


def test_missing_annotations(dialogue, annotations):
    partial = {k: v for k, v in annotations.items() if k != "d1_u5"}
    with pytest.raises(MissingAnnotation):
        build_prompt(dialogue, "d1_u5", partial, PromptConfig())
    with pytest.raises(MissingAnnotation):
        build_prompt(dialogue, "d1_u6", partial, PromptConfig())
    # d1_u5 is outside the annotated depth for a target at turn 7 when depth is 1
    build_prompt(dialogue, "d1_u7", partial, PromptConfig(context_depth=1))


def test_unknown_target(dialogue, annotations):
    with pytest.raises(UnknownUtterance):
        build_prompt(dialogue, "zz", annotations)


def test_label_closure(dialogue, annotations):
    for mode in MODES:
        q = build_prompt(dialogue, "d1_u3", annotations, PromptConfig(mode=mode)).question
        listed = q.split("from: ")[1].split(". Answer")[0].split(", ")
        assert listed == list(IEMOCAP_LABELS)


def test_default_question_wording():
    assert question_text("with_speech", ("a", "b")) == (
        "Considering both the conversational context and the described speech characteristics, "
        "select exactly one emotion label for the last utterance from: a, b. Answer with the label only."
    )


def test_speech_only_prompt(dialogue, annotations):
    b = build_prompt(dialogue, "d1_u3", annotations, PromptConfig(mode="speech_only"))
    assert b.context_block == ""
    assert "line number" not in b.full_text
    assert b.full_text.split("\n\n") == [DEFAULT_INSTRUCTION, b.speech_block, b.question]
    imp = build_speech_only_prompt(annotations["d1_u3"], IEMOCAP_LABELS, "impression")
    assert annotations["d1_u3"].impression in imp.full_text
    with pytest.raises(MissingAnnotation):
        build_speech_only_prompt(None, IEMOCAP_LABELS)


def test_three_class_speech_only_content():
    b = build_speech_only_prompt(annotation("u", "low", 3), IEMOCAP_LABELS)
    assert "low volume with low variation; low pitch with low variation; low speaking rate" in b.speech_block


def test_full_text_omits_empty_blocks():
    assert PromptBundle("i", "", "", "q").full_text == "i\n\nq"


def test_config_validation():
    with pytest.raises(ValueError):
        PromptConfig(context_window=2, context_depth=3)
    with pytest.raises(ValueError):
        PromptConfig(mode="audio")
    with pytest.raises(ValueError):
        PromptConfig(context_feature="energy")


def test_label_sets(dialogue):
    assert label_set_for("IEMOCAP") == IEMOCAP_LABELS and len(IEMOCAP_LABELS) == 6
    assert label_set_for("meld") == MELD_LABELS and len(MELD_LABELS) == 7
    custom = Manifest(dialogue.utterances[:0], ("a", "b"))
    assert label_set_for("custom", custom) == ("a", "b")
    with pytest.raises(ValueError):
        label_set_for("custom")
