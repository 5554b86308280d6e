"""Emotion recognition in conversation from transcripts plus natural-language speech descriptions."""

from __future__ import annotations

from speechcue.corpus import Manifest, Utterance, load_manifest
from speechcue.describe import Annotation, describe_features, render_impression
from speechcue.dsp import AudioClip, DSPConfig, ProsodicFeatures, decode_wav, extract_features
from speechcue.prompt import PromptConfig, build_prompt
from speechcue.thresholds import NormalizationPolicy, QuantileScheme, build_threshold_table

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AudioClip",
    "DSPConfig",
    "Manifest",
    "NormalizationPolicy",
    "PromptConfig",
    "ProsodicFeatures",
    "QuantileScheme",
    "Utterance",
    "build_prompt",
    "build_threshold_table",
    "decode_wav",
    "describe_features",
    "extract_features",
    "load_manifest",
    "render_impression",
]
