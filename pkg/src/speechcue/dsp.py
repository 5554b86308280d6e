"""Audio decoding and the five prosodic features: volume, pitch and speaking rate."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from speechcue.errors import (
    ClipTooShort,
    CorruptHeader,
    InvalidBand,
    NonPositiveDuration,
    UnsupportedEncoding,
)

RMS_FLOOR = 1e-5  # -100 dB


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("AudioClip holds mono samples only")
        if x.size == 0:
            raise ValueError("AudioClip is empty")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.abs(x) <= 1.0):
            raise ValueError("samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameSeries:
    frame_len: int
    hop: int
    frames: np.ndarray  # (n_frames, frame_len), read-only view

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class DSPConfig:
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    # Pitch frames must hold two periods of f_min; 25 ms is too short for 70 Hz.
    pitch_frame_ms: float = 40.0
    f_min: float = 70.0
    f_max: float = 400.0
    periodicity_threshold: float = 0.2
    voicing_gate_db: float = 35.0


@dataclass(frozen=True)
class ProsodicFeatures:
    avg_volume_db: float
    volume_variation_db: float
    avg_pitch_hz: float | None
    pitch_variation_hz: float | None
    speaking_rate_wps: float
    voiced_ratio: float
    duration_s: float
    flags: tuple[str, ...] = field(default=(), compare=False)

    def to_record(self) -> dict:
        return {
            "avg_volume_db": self.avg_volume_db,
            "volume_variation_db": self.volume_variation_db,
            "avg_pitch_hz": self.avg_pitch_hz,
            "pitch_variation_hz": self.pitch_variation_hz,
            "speaking_rate_wps": self.speaking_rate_wps,
            "voiced_ratio": self.voiced_ratio,
            "duration_s": self.duration_s,
            "flags": list(self.flags),
        }

    @classmethod
    def from_record(cls, rec: dict) -> ProsodicFeatures:
        return cls(
            avg_volume_db=float(rec["avg_volume_db"]),
            volume_variation_db=float(rec["volume_variation_db"]),
            avg_pitch_hz=None if rec["avg_pitch_hz"] is None else float(rec["avg_pitch_hz"]),
            pitch_variation_hz=(
                None if rec["pitch_variation_hz"] is None else float(rec["pitch_variation_hz"])
            ),
            speaking_rate_wps=float(rec["speaking_rate_wps"]),
            voiced_ratio=float(rec["voiced_ratio"]),
            duration_s=float(rec["duration_s"]),
            flags=tuple(rec.get("flags", ())),
        )


def decode_wav(path: str | Path) -> AudioClip:
    """Read a 16-bit PCM WAV file (mono or stereo) into a mono clip in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except wave.Error as exc:
        if "unknown format" in str(exc):
            raise UnsupportedEncoding(f"{path}: {exc}") from None
        raise CorruptHeader(f"{path}: {exc}") from None
    except EOFError:
        raise CorruptHeader(f"{path}: truncated header") from None

    if width != 2:
        raise UnsupportedEncoding(f"{path}: {8 * width}-bit samples, expected 16-bit PCM")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{path}: {channels} channels")
    if rate <= 0:
        raise CorruptHeader(f"{path}: sample rate {rate}")
    pcm = np.frombuffer(raw, dtype="<i2")
    usable = pcm.size - pcm.size % channels
    if usable == 0:
        raise CorruptHeader(f"{path}: no audio data")
    x = pcm[:usable].astype(np.float64).reshape(-1, channels) / 32768.0
    return AudioClip(x.mean(axis=1), rate)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(pcm.tobytes())


def _ms_to_samples(ms: float, sample_rate: int) -> int:
    return int(round(ms * sample_rate / 1000.0))


def make_frames(clip: AudioClip, frame_ms: float, hop_ms: float) -> FrameSeries:
    if not frame_ms >= hop_ms > 0:
        raise ValueError("need frame_ms >= hop_ms > 0")
    frame_len = _ms_to_samples(frame_ms, clip.sample_rate)
    hop = max(1, _ms_to_samples(hop_ms, clip.sample_rate))
    x = clip.samples
    if x.size < frame_len:
        return FrameSeries(frame_len, hop, np.empty((0, frame_len)))
    frames = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    return FrameSeries(frame_len, hop, frames)


def _rms_db(frames: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(frames * frames, axis=1))
    return 20.0 * np.log10(np.maximum(rms, RMS_FLOOR))


def frame_rms_db(clip: AudioClip, frame_ms: float = 25.0, hop_ms: float = 10.0) -> np.ndarray:
    """Per-frame RMS level in dB, floored at -100 dB."""
    fs = make_frames(clip, frame_ms, hop_ms)
    if len(fs) == 0:
        raise ClipTooShort(
            f"{clip.samples.size} samples is shorter than one {fs.frame_len}-sample frame"
        )
    return _rms_db(fs.frames)


def _check_band(sample_rate: int, frame_ms: float, f_min: float, f_max: float) -> None:
    if not 0 < f_min < f_max:
        raise InvalidBand(f"need 0 < f_min < f_max, got [{f_min}, {f_max}]")
    if f_max >= sample_rate / 2:
        raise InvalidBand(f"f_max {f_max} Hz is not below Nyquist ({sample_rate / 2} Hz)")
    if frame_ms * f_min / 1000.0 < 2.0:
        raise InvalidBand(
            f"a {frame_ms} ms frame holds fewer than two periods of f_min={f_min} Hz"
        )


def _autocorr(frames: np.ndarray, max_lag: int) -> np.ndarray:
    n = frames.shape[-1]
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(frames, nfft, axis=-1)
    return np.fft.irfft(spec * spec.conj(), nfft, axis=-1)[..., : max_lag + 1]


def cumulative_mean_normalized_difference(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """Window-compensated difference function, normalized by its running mean.

    Frames are Hann-windowed; the autocorrelation of each frame is divided by the
    autocorrelation of the window so a periodic frame gives a difference near
    zero at its period. Returns an array of shape (n_frames, max_lag + 1) whose
    lag-0 column is 1. Silent frames give 1 everywhere.
    """
    n = frames.shape[-1]
    window = np.hanning(n)
    ac = _autocorr(frames * window, max_lag)
    wac = _autocorr(window, max_lag)
    energy = ac[:, :1]
    silent = energy[:, 0] <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (ac / np.where(silent[:, None], 1.0, energy)) / (wac / wac[0])
    diff = np.clip(1.0 - r, 0.0, None)
    diff[silent] = 0.0

    cmnd = np.ones_like(diff)
    lags = np.arange(1, max_lag + 1)
    running = np.cumsum(diff[:, 1:], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cmnd[:, 1:] = np.where(running > 0, diff[:, 1:] * lags / running, 1.0)
    return cmnd


def _pick_lag(cmnd: np.ndarray, lag_min: int, lag_max: int, threshold: float) -> float | None:
    below = np.flatnonzero(cmnd[lag_min : lag_max + 1] < threshold)
    if below.size == 0:
        return None
    tau = lag_min + int(below[0])
    while tau < lag_max and cmnd[tau + 1] < cmnd[tau]:
        tau += 1
    if 0 < tau < cmnd.size - 1:
        a, b, c = cmnd[tau - 1], cmnd[tau], cmnd[tau + 1]
        denom = a - 2.0 * b + c
        if denom > 0:
            return tau + 0.5 * (a - c) / denom
    return float(tau)


def estimate_pitch(
    clip: AudioClip,
    frame_ms: float = 40.0,
    hop_ms: float = 10.0,
    f_min: float = 70.0,
    f_max: float = 400.0,
    threshold: float = 0.2,
    gate_db: float = 35.0,
) -> np.ndarray:
    """Per-frame F0 in Hz, NaN where the frame is unvoiced.

    A frame is voiced when its normalized difference dips below ``threshold``
    inside the lag band, its RMS level is within ``gate_db`` of the loudest
    frame, and the refined estimate stays inside [f_min, f_max].
    """
    sr = clip.sample_rate
    _check_band(sr, frame_ms, f_min, f_max)
    fs = make_frames(clip, frame_ms, hop_ms)
    f0 = np.full(len(fs), np.nan)
    if len(fs) == 0:
        return f0

    # One extra lag on each side so tones at the band edges survive refinement.
    lag_min = max(2, int(math.floor(sr / f_max)) - 1)
    lag_max = min(fs.frame_len - 3, int(math.ceil(sr / f_min)) + 1)
    cmnd = cumulative_mean_normalized_difference(fs.frames, lag_max + 1)

    level = _rms_db(fs.frames)
    loud = (level > level.max() - gate_db) & (level > 20.0 * math.log10(RMS_FLOOR))
    for i in np.flatnonzero(loud):
        lag = _pick_lag(cmnd[i], lag_min, lag_max, threshold)
        if lag is None:
            continue
        if sr / f_max - 1.0 <= lag <= sr / f_min + 1.0:
            f0[i] = min(max(sr / lag, f_min), f_max)
    return f0


def estimate_speaking_rate(transcript: str | None, duration_s: float) -> float:
    """Whitespace-delimited words per second."""
    if not duration_s > 0:
        raise NonPositiveDuration(f"duration {duration_s} s")
    if not transcript:
        return 0.0
    return len(transcript.split()) / duration_s


def extract_features(
    clip: AudioClip, transcript: str | None, config: DSPConfig | None = None
) -> ProsodicFeatures:
    cfg = config or DSPConfig()
    levels = frame_rms_db(clip, cfg.frame_ms, cfg.hop_ms)
    f0 = estimate_pitch(
        clip,
        cfg.pitch_frame_ms,
        cfg.hop_ms,
        cfg.f_min,
        cfg.f_max,
        cfg.periodicity_threshold,
        cfg.voicing_gate_db,
    )
    voiced = f0[~np.isnan(f0)]
    voiced_ratio = voiced.size / f0.size if f0.size else 0.0

    flags = []
    if not transcript or not transcript.strip():
        flags.append("no_transcript")
    if voiced.size == 0:
        flags.append("unvoiced")

    return ProsodicFeatures(
        avg_volume_db=float(levels.mean()),
        volume_variation_db=float(levels.std()),
        avg_pitch_hz=float(voiced.mean()) if voiced.size else None,
        pitch_variation_hz=float(voiced.std()) if voiced.size else None,
        speaking_rate_wps=estimate_speaking_rate(transcript, clip.duration),
        voiced_ratio=float(voiced_ratio),
        duration_s=clip.duration,
        flags=tuple(flags),
    )
