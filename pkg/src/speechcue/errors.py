"""Exception types raised across the pipeline."""

from __future__ import annotations


class SpeechCueError(Exception):
    """Base class for every error raised by this package."""


# corpus
class MalformedRecord(SpeechCueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateUtteranceId(SpeechCueError):
    pass


class GapInTurnIndex(SpeechCueError):
    def __init__(self, dialogue_id: str, turns: list[int]):
        super().__init__(f"dialogue {dialogue_id!r} has non-contiguous turns {turns}")
        self.dialogue_id = dialogue_id


class UnknownLabel(SpeechCueError):
    def __init__(self, label: str):
        super().__init__(f"label {label!r} is not in the label set")
        self.label = label


class UnknownUtterance(SpeechCueError, KeyError):
    def __str__(self) -> str:
        return f"unknown utterance {self.args[0]!r}"


# dsp
class UnsupportedEncoding(SpeechCueError):
    pass


class CorruptHeader(SpeechCueError):
    pass


class ClipTooShort(SpeechCueError):
    pass


class InvalidBand(SpeechCueError):
    pass


class NonPositiveDuration(SpeechCueError):
    pass


# thresholds
class EmptyInput(SpeechCueError):
    pass


class MissingUtterance(SpeechCueError):
    pass


class BadBoundaryCount(SpeechCueError):
    pass


# describe / prompt
class MissingVolume(SpeechCueError):
    pass


class MissingAnnotation(SpeechCueError):
    pass


# inference
class EndpointUnreachable(SpeechCueError):
    pass


class AuthFailure(SpeechCueError):
    pass


class MissingGoldLabel(SpeechCueError):
    def __init__(self, utterance_id: str):
        super().__init__(f"utterance {utterance_id!r} has no gold label")
        self.utterance_id = utterance_id


# baseline
class SchemeMismatch(SpeechCueError):
    pass


class DegenerateData(SpeechCueError):
    pass


class DimensionMismatch(SpeechCueError):
    pass


# metrics
class LengthMismatch(SpeechCueError):
    pass


class LabelOutsideSet(SpeechCueError):
    pass


class LabelSetMismatch(SpeechCueError):
    pass


# cli
class MissingInput(SpeechCueError):
    pass


class SchemaVersionMismatch(SpeechCueError):
    pass
