"""Render categorized features as a plain description and as a hedged impression sentence."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Literal

from speechcue.errors import MissingVolume
from speechcue.jsonl import ANNOTATIONS, tag
from speechcue.thresholds import FEATURES as FEATURE_ORDER
from speechcue.thresholds import LEVEL_NAMES, CategorizedFeature, CategoryLevel

ImpressionFeature = Literal["pitch", "pitch_variation", "volume", "volume_variation", "rate"]
Band = Literal["high", "low", "medium"]

DEFAULT_HEDGE_MARGIN = 0.05

# (feature, band) -> fragment; first letters lowercased so fragments compose mid-sentence.
IMPRESSION_MAP: dict[tuple[str, str], str] = {
    ("pitch", "high"): "uses a higher pitch",
    ("pitch", "low"): "uses a lower pitch",
    ("pitch", "medium"): "has a moderate pitch",
    ("pitch_variation", "high"): "with noticeable variation, suggesting expressiveness",
    ("pitch_variation", "low"): "that remains steady, potentially indicating calmness or seriousness",
    ("pitch_variation", "medium"): "with typical variation",
    ("volume", "high"): "speaking loudly, which might indicate excitement, confidence, or urgency",
    ("volume", "low"): "speaking softly, possibly suggesting calmness, shyness, or caution",
    ("volume", "medium"): "using a moderate volume",
    ("volume_variation", "high"): "with significant volume changes",
    ("volume_variation", "low"): "with little volume variation",
    ("volume_variation", "medium"): "with normal volume variation",
    ("rate", "high"): "talking quickly, which could indicate excitement, urgency, or nervousness",
    ("rate", "low"): "talking slowly, possibly suggesting thoughtfulness, hesitation, or calmness",
    ("rate", "medium"): "speaking at a moderate pace",
}

# Same cells with "likely" placed before the interpretive part.
HEDGED_MAP: dict[tuple[str, str], str] = {
    ("pitch", "high"): "likely uses a higher pitch",
    ("pitch", "low"): "likely uses a lower pitch",
    ("pitch", "medium"): "likely has a moderate pitch",
    ("pitch_variation", "high"): "with noticeable variation, likely suggesting expressiveness",
    ("pitch_variation", "low"): "that remains steady, likely indicating calmness or seriousness",
    ("pitch_variation", "medium"): "with what is likely typical variation",
    ("volume", "high"): "speaking loudly, which likely indicates excitement, confidence, or urgency",
    ("volume", "low"): "speaking softly, likely suggesting calmness, shyness, or caution",
    ("volume", "medium"): "likely using a moderate volume",
    ("volume_variation", "high"): "with what are likely significant volume changes",
    ("volume_variation", "low"): "with likely little volume variation",
    ("volume_variation", "medium"): "with what is likely normal volume variation",
    ("rate", "high"): "talking quickly, which likely indicates excitement, urgency, or nervousness",
    ("rate", "low"): "talking slowly, likely suggesting thoughtfulness, hesitation, or calmness",
    ("rate", "medium"): "likely speaking at a moderate pace",
}

_BANDS: dict[str, Band] = {
    "very high": "high",
    "high": "high",
    "medium-high": "medium",
    "medium": "medium",
    "medium-low": "medium",
    "low": "low",
    "very low": "low",
}


@dataclass(frozen=True)
class CategorizedFeatures:
    avg_volume: CategorizedFeature | None
    volume_variation: CategorizedFeature | None
    avg_pitch: CategorizedFeature | None
    pitch_variation: CategorizedFeature | None
    speaking_rate: CategorizedFeature | None

    @classmethod
    def from_mapping(cls, m: Mapping[str, CategorizedFeature | None]) -> CategorizedFeatures:
        return cls(
            m.get("avg_volume"),
            m.get("volume_variation"),
            m.get("avg_pitch"),
            m.get("pitch_variation"),
            m.get("speaking_rate"),
        )

    @property
    def has_pitch(self) -> bool:
        return self.avg_pitch is not None and self.pitch_variation is not None

    def _require_volume(self) -> None:
        if self.avg_volume is None or self.volume_variation is None:
            raise MissingVolume("volume features are required")


@dataclass(frozen=True)
class SpeechDescription:
    text: str


@dataclass(frozen=True)
class SpeechImpression:
    text: str


def band_of(level: CategoryLevel | str) -> Band:
    name = level.name if isinstance(level, CategoryLevel) else level
    return _BANDS[name]


def variation_adjective(level: CategoryLevel | str) -> str:
    name = level.name if isinstance(level, CategoryLevel) else level
    return "moderate" if name == "medium" else name


def pitch_clause(cf: CategorizedFeatures) -> str:
    if not cf.has_pitch:
        return "no detectable pitch"
    return (
        f"{cf.avg_pitch.level.name} pitch with "
        f"{variation_adjective(cf.pitch_variation.level)} variation"
    )


def volume_clause(cf: CategorizedFeatures) -> str:
    cf._require_volume()
    return (
        f"{cf.avg_volume.level.name} volume with "
        f"{variation_adjective(cf.volume_variation.level)} variation"
    )


def describe_features(cf: CategorizedFeatures) -> SpeechDescription:
    clauses = [volume_clause(cf), pitch_clause(cf)]
    if cf.speaking_rate is not None:
        clauses.append(f"{cf.speaking_rate.level.name} speaking rate")
    return SpeechDescription("; ".join(clauses))


def impression_fragment(
    feature: ImpressionFeature, level: CategoryLevel | str, hedged: bool = False
) -> str:
    table = HEDGED_MAP if hedged else IMPRESSION_MAP
    return table[(feature, band_of(level))]


def _fragment(feature: str, cat: CategorizedFeature, hedge_margin: float) -> str:
    return impression_fragment(feature, cat.level, hedged=cat.margin < hedge_margin)


def render_impression(
    cf: CategorizedFeatures, hedge_margin: float = DEFAULT_HEDGE_MARGIN
) -> SpeechImpression:
    """One sentence covering pitch, volume and speaking rate, in that order.

    Fragments for features lying within ``hedge_margin`` of a category boundary
    switch to their hedged wording.
    """
    if hedge_margin < 0:
        raise ValueError("hedge_margin must be non-negative")
    cf._require_volume()

    parts = []
    if cf.has_pitch:
        parts.append(
            _fragment("pitch", cf.avg_pitch, hedge_margin)
            + " "
            + _fragment("pitch_variation", cf.pitch_variation, hedge_margin)
        )
    else:
        parts.append("has no detectable pitch")

    # The variation phrase attaches to the volume head, before any interpretive clause:
    # "speaking loudly with significant volume changes, which might indicate ..."
    volume = _fragment("volume", cf.avg_volume, hedge_margin)
    variation = _fragment("volume_variation", cf.volume_variation, hedge_margin)
    head, sep, tail = volume.partition(", ")
    parts.append(f"{head} {variation}{sep}{tail}")

    if cf.speaking_rate is not None:
        parts.append(_fragment("rate", cf.speaking_rate, hedge_margin))

    sentence = ", ".join(parts)
    return SpeechImpression(sentence[0].upper() + sentence[1:] + ".")


def pitch_suffix(cf: CategorizedFeatures) -> str:
    if not cf.has_pitch:
        return "pitch: none detected"
    return (
        f"pitch: {cf.avg_pitch.level.name} with "
        f"{variation_adjective(cf.pitch_variation.level)} variation"
    )


def volume_suffix(cf: CategorizedFeatures) -> str:
    cf._require_volume()
    return (
        f"volume: {cf.avg_volume.level.name} with "
        f"{variation_adjective(cf.volume_variation.level)} variation"
    )


@dataclass(frozen=True)
class Annotation:
    """Description, impression and per-feature levels for one utterance."""

    utterance_id: str
    num_classes: int
    features: CategorizedFeatures
    description: str
    impression: str

    @classmethod
    def build(
        cls,
        utterance_id: str,
        num_classes: int,
        features: CategorizedFeatures,
        hedge_margin: float = DEFAULT_HEDGE_MARGIN,
    ) -> Annotation:
        return cls(
            utterance_id,
            num_classes,
            features,
            describe_features(features).text,
            render_impression(features, hedge_margin).text,
        )

    def to_record(self) -> dict:
        levels, margins = {}, {}
        for feat in FEATURE_ORDER:
            cat = getattr(self.features, feat)
            levels[feat] = None if cat is None else cat.level.name
            margins[feat] = None if cat is None else cat.margin
        return {
            "schema": tag(ANNOTATIONS),
            "utterance_id": self.utterance_id,
            "num_classes": self.num_classes,
            "description": self.description,
            "impression": self.impression,
            "levels": levels,
            "margins": margins,
        }

    @classmethod
    def from_record(cls, rec: dict) -> Annotation:
        names = LEVEL_NAMES[rec["num_classes"]]
        cats = {}
        for feat in FEATURE_ORDER:
            name = rec["levels"].get(feat)
            cats[feat] = (
                None
                if name is None
                else CategorizedFeature(CategoryLevel(names.index(name), name), rec["margins"][feat])
            )
        return cls(
            rec["utterance_id"],
            rec["num_classes"],
            CategorizedFeatures.from_mapping(cats),
            rec["description"],
            rec["impression"],
        )
