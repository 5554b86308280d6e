"""Quantile thresholds, group standardization and categorization of prosodic features."""

from __future__ import annotations

import math
import sys
from collections import defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from speechcue.corpus import Manifest, Utterance
from speechcue.dsp import ProsodicFeatures
from speechcue.errors import BadBoundaryCount, EmptyInput, MissingUtterance
from speechcue.jsonl import THRESHOLDS, tag

FEATURES = ("avg_volume", "volume_variation", "avg_pitch", "pitch_variation", "speaking_rate")

_SOURCE_FIELDS = {
    "avg_volume": "avg_volume_db",
    "volume_variation": "volume_variation_db",
    "avg_pitch": "avg_pitch_hz",
    "pitch_variation": "pitch_variation_hz",
    "speaking_rate": "speaking_rate_wps",
}

QUANTILE_SPLITS: dict[int, tuple[float, ...]] = {
    3: (0.25, 0.75),
    4: (0.25, 0.5, 0.75),
    5: (0.1, 0.25, 0.75, 0.9),
    6: (0.1, 0.25, 0.5, 0.75, 0.9),
}

LEVEL_NAMES: dict[int, tuple[str, ...]] = {
    3: ("low", "medium", "high"),
    4: ("low", "medium-low", "medium-high", "high"),
    5: ("very low", "low", "medium", "high", "very high"),
    6: ("very low", "low", "medium-low", "medium-high", "high", "very high"),
}

GLOBAL = "global"
SIGMA_FLOOR = 1e-9
SPAN_FLOOR = sys.float_info.epsilon

Grouping = Literal["global", "per_speaker", "per_group"]

# Per-utterance feature values; None marks an absent (unvoiced) pitch value.
FeatureValues = dict[str, float | None]


@dataclass(frozen=True)
class QuantileScheme:
    num_classes: int
    quantiles: tuple[float, ...]

    def __post_init__(self) -> None:
        if QUANTILE_SPLITS.get(self.num_classes) != tuple(self.quantiles):
            raise ValueError(
                f"no quantile scheme {self.num_classes} -> {list(self.quantiles)}"
            )

    @classmethod
    def for_classes(cls, num_classes: int) -> QuantileScheme:
        if num_classes not in QUANTILE_SPLITS:
            raise ValueError(f"num_classes must be one of {sorted(QUANTILE_SPLITS)}")
        return cls(num_classes, QUANTILE_SPLITS[num_classes])

    @property
    def level_names(self) -> tuple[str, ...]:
        return LEVEL_NAMES[self.num_classes]

    def level(self, index: int) -> CategoryLevel:
        return CategoryLevel(index, self.level_names[index])


@dataclass(frozen=True)
class NormalizationPolicy:
    grouping: Grouping = "per_speaker"
    min_count: int = 24

    def __post_init__(self) -> None:
        if self.grouping not in ("global", "per_speaker", "per_group"):
            raise ValueError(f"unknown grouping {self.grouping!r}")
        if self.min_count < 2:
            raise ValueError("min_count must be at least 2")

    def group_of(self, utt: Utterance) -> str:
        if self.grouping == "per_speaker":
            return f"speaker:{utt.speaker_id}"
        if self.grouping == "per_group" and utt.speaker_group:
            return f"group:{utt.speaker_group}"
        return GLOBAL


@dataclass(frozen=True)
class CategoryLevel:
    index: int
    name: str


@dataclass(frozen=True)
class CategorizedFeature:
    level: CategoryLevel
    margin: float


def feature_values(pf: ProsodicFeatures) -> FeatureValues:
    return {name: getattr(pf, src) for name, src in _SOURCE_FIELDS.items()}


def compute_quantiles(values: Sequence[float], quantiles: Sequence[float]) -> list[float]:
    """Quantiles by linear interpolation between order statistics at position (n-1)*q."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    if x.size == 0:
        raise EmptyInput("cannot take quantiles of an empty sample")
    out = []
    for q in quantiles:
        pos = (x.size - 1) * q
        lo = int(math.floor(pos))
        hi = min(lo + 1, x.size - 1)
        frac = pos - lo
        out.append(float(x[lo] + frac * (x[hi] - x[lo])))
    # interpolation rounding can break monotonicity by an ulp
    return [float(v) for v in np.maximum.accumulate(out)]


def _inter_decile_span(values: Sequence[float]) -> float:
    lo, hi = compute_quantiles(values, (0.1, 0.9))
    return max(hi - lo, SPAN_FLOOR)


@dataclass
class Standardizer:
    """Per-group mean and standard deviation of each feature, with a global fallback."""

    policy: NormalizationPolicy
    stats: dict[str, dict[str, tuple[float, float]]] = field(default_factory=dict)

    @classmethod
    def fit(
        cls,
        values: Mapping[str, FeatureValues],
        manifest: Manifest,
        policy: NormalizationPolicy,
    ) -> Standardizer:
        groups = _group_ids(values, manifest, policy)
        stats: dict[str, dict[str, tuple[float, float]]] = {}
        for feat in FEATURES:
            per_group: dict[str, list[float]] = defaultdict(list)
            everything = []
            for uid, vec in values.items():
                v = vec[feat]
                if v is None:
                    continue
                everything.append(v)
                per_group[groups[uid]].append(v)
            entry = {}
            if everything:
                entry[GLOBAL] = _moments(everything)
            for g, vs in per_group.items():
                if g != GLOBAL and len(vs) >= policy.min_count:
                    entry[g] = _moments(vs)
            stats[feat] = entry
        return cls(policy, stats)

    def transform_one(self, utt: Utterance, vec: FeatureValues) -> FeatureValues:
        group = self.policy.group_of(utt)
        out: FeatureValues = {}
        for feat in FEATURES:
            v = vec[feat]
            entry = self.stats.get(feat, {})
            if v is None or GLOBAL not in entry:
                out[feat] = None
                continue
            mu, sigma = entry.get(group, entry[GLOBAL])
            out[feat] = (v - mu) / sigma
        return out

    def transform(
        self, values: Mapping[str, FeatureValues], manifest: Manifest
    ) -> dict[str, FeatureValues]:
        return {uid: self.transform_one(_lookup(manifest, uid), vec) for uid, vec in values.items()}

    def to_dict(self) -> dict:
        return {
            "grouping": self.policy.grouping,
            "min_count": self.policy.min_count,
            "stats": {
                feat: {g: [mu, sd] for g, (mu, sd) in sorted(entry.items())}
                for feat, entry in self.stats.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Standardizer:
        policy = NormalizationPolicy(doc["grouping"], doc["min_count"])
        stats = {
            feat: {g: (float(ms[0]), float(ms[1])) for g, ms in entry.items()}
            for feat, entry in doc["stats"].items()
        }
        return cls(policy, stats)


def _moments(vs: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(vs, dtype=np.float64)
    return float(arr.mean()), max(float(arr.std()), SIGMA_FLOOR)


def _lookup(manifest: Manifest, uid: str) -> Utterance:
    if uid not in manifest:
        raise MissingUtterance(uid)
    return manifest.get(uid)


def _group_ids(
    values: Mapping[str, object], manifest: Manifest, policy: NormalizationPolicy
) -> dict[str, str]:
    return {uid: policy.group_of(_lookup(manifest, uid)) for uid in values}


def _as_values(features: Mapping[str, ProsodicFeatures | FeatureValues]) -> dict[str, FeatureValues]:
    return {
        uid: feature_values(f) if isinstance(f, ProsodicFeatures) else dict(f)
        for uid, f in features.items()
    }


def standardize(
    features: Mapping[str, ProsodicFeatures | FeatureValues],
    manifest: Manifest,
    policy: NormalizationPolicy,
) -> dict[str, FeatureValues]:
    """Z-score each feature within its policy group; sparse groups use global statistics."""
    values = _as_values(features)
    return Standardizer.fit(values, manifest, policy).transform(values, manifest)


@dataclass
class ThresholdTable:
    scheme: QuantileScheme
    policy: NormalizationPolicy
    # feature -> group -> boundaries / span
    boundaries: dict[str, dict[str, list[float]]]
    spans: dict[str, dict[str, float]]
    standardizer: Standardizer | None = None

    def lookup(self, feature: str, group: str) -> tuple[list[float], float]:
        per_group = self.boundaries[feature]
        key = group if group in per_group else GLOBAL
        return per_group[key], self.spans[feature][key]

    def prepare(self, utt: Utterance, pf: ProsodicFeatures | FeatureValues) -> FeatureValues:
        """Raw features for one utterance, standardized the way the table was built."""
        vec = feature_values(pf) if isinstance(pf, ProsodicFeatures) else dict(pf)
        if self.standardizer is not None:
            vec = self.standardizer.transform_one(utt, vec)
        return vec

    def categorize_utterance(
        self, utt: Utterance, pf: ProsodicFeatures | FeatureValues
    ) -> dict[str, CategorizedFeature | None]:
        vec = self.prepare(utt, pf)
        group = self.policy.group_of(utt)
        out: dict[str, CategorizedFeature | None] = {}
        for feat in FEATURES:
            v = vec[feat]
            if v is None or feat not in self.boundaries:
                out[feat] = None
                continue
            bounds, span = self.lookup(feat, group)
            out[feat] = categorize(v, bounds, self.scheme, span)
        return out

    def to_dict(self) -> dict:
        return {
            "schema": tag(THRESHOLDS),
            "num_classes": self.scheme.num_classes,
            "quantiles": list(self.scheme.quantiles),
            "grouping": self.policy.grouping,
            "min_count": self.policy.min_count,
            "features": {
                feat: {
                    g: {"boundaries": bounds, "span": self.spans[feat][g]}
                    for g, bounds in sorted(groups.items())
                }
                for feat, groups in self.boundaries.items()
            },
            "standardization": None if self.standardizer is None else self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ThresholdTable:
        scheme = QuantileScheme(doc["num_classes"], tuple(doc["quantiles"]))
        policy = NormalizationPolicy(doc["grouping"], doc["min_count"])
        boundaries = {
            f: {g: [float(b) for b in e["boundaries"]] for g, e in groups.items()}
            for f, groups in doc["features"].items()
        }
        spans = {f: {g: float(e["span"]) for g, e in groups.items()} for f, groups in doc["features"].items()}
        std = doc.get("standardization")
        return cls(scheme, policy, boundaries, spans, Standardizer.from_dict(std) if std else None)


def build_threshold_table(
    features: Mapping[str, ProsodicFeatures | FeatureValues],
    manifest: Manifest,
    scheme: QuantileScheme,
    policy: NormalizationPolicy,
    standardizer: Standardizer | None = None,
) -> ThresholdTable:
    """Quantile boundaries per feature for every group with at least ``min_count`` members.

    ``features`` should already be standardized when ``standardizer`` is given;
    the standardizer is stored so new utterances can be mapped the same way.
    A feature with no observed values at all (e.g. pitch on an all-silent
    corpus) is left out of the table.
    """
    values = _as_values(features)
    if not values:
        raise EmptyInput("no feature vectors")
    groups = _group_ids(values, manifest, policy)
    boundaries: dict[str, dict[str, list[float]]] = {}
    spans: dict[str, dict[str, float]] = {}
    for feat in FEATURES:
        per_group: dict[str, list[float]] = defaultdict(list)
        everything = []
        for uid, vec in values.items():
            v = vec[feat]
            if v is None:
                continue
            everything.append(v)
            per_group[groups[uid]].append(v)
        if not everything:
            continue
        boundaries[feat] = {GLOBAL: compute_quantiles(everything, scheme.quantiles)}
        spans[feat] = {GLOBAL: _inter_decile_span(everything)}
        for g, vs in per_group.items():
            if g != GLOBAL and len(vs) >= policy.min_count:
                boundaries[feat][g] = compute_quantiles(vs, scheme.quantiles)
                spans[feat][g] = _inter_decile_span(vs)
    if not boundaries:
        raise EmptyInput("every feature value is absent")
    return ThresholdTable(scheme, policy, boundaries, spans, standardizer)


def categorize(
    value: float, boundaries: Sequence[float], scheme: QuantileScheme, span: float
) -> CategorizedFeature:
    """Level = number of boundaries at or below ``value`` (ties go to the upper class)."""
    if len(boundaries) != scheme.num_classes - 1:
        raise BadBoundaryCount(
            f"{scheme.num_classes}-class scheme needs {scheme.num_classes - 1} boundaries, "
            f"got {len(boundaries)}"
        )
    index = sum(1 for b in boundaries if value >= b)
    margin = min(abs(value - b) for b in boundaries) / max(span, SPAN_FLOOR)
    return CategorizedFeature(scheme.level(index), margin)
