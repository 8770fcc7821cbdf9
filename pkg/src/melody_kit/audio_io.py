"""WAV decoding, resampling and framing."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

DEFAULT_SAMPLE_RATE = 8000


class AudioError(ValueError):
    """Raised when an audio file cannot be decoded."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


_INT_SCALE = {np.dtype(np.uint8): None, np.dtype(np.int16): 2.0**15, np.dtype(np.int32): 2.0**31}


def load_audio(path) -> Waveform:
    """Read a PCM WAV file into a mono waveform in [-1, 1].

    8-bit unsigned, 16/24/32-bit signed integer and 32/64-bit float files
    are accepted. Stereo (or more) channels are averaged.
    """
    path = Path(path)
    try:
        rate, data = scipy.io.wavfile.read(path)
    except FileNotFoundError:
        raise AudioError(f"{path}: file not found") from None
    except (ValueError, OSError) as exc:
        raise AudioError(f"{path}: unreadable WAV ({exc})") from None

    dtype = data.dtype
    if dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif dtype in (np.int16, np.int32):
        # scipy left-justifies 24-bit samples into int32
        samples = data.astype(np.float64) / _INT_SCALE[dtype]
    elif dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported sample encoding {dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if not np.all(np.isfinite(samples)):
        raise AudioError(f"{path}: non-finite samples")
    return Waveform(samples, int(rate))


def write_audio(path, w: Waveform) -> None:
    """Write a waveform as 16-bit PCM WAV."""
    pcm = np.clip(np.round(w.samples * 2.0**15), -(2**15), 2**15 - 1).astype(np.int16)
    scipy.io.wavfile.write(Path(path), w.sample_rate, pcm)


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited resampling with a Kaiser-windowed sinc filter."""
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    target_rate = int(target_rate)
    if target_rate == w.sample_rate:
        return w
    ratio = Fraction(target_rate, w.sample_rate)
    out = scipy.signal.resample_poly(
        w.samples, ratio.numerator, ratio.denominator, window=("kaiser", 8.0)
    )
    return Waveform(out, target_rate)


def n_frames(length: int, hop: int) -> int:
    return math.ceil(length / hop)


def frame_signal(w: Waveform, window_size: int, hop: int) -> np.ndarray:
    """Cut ``w`` into frames of ``window_size`` samples every ``hop`` samples.

    Frame ``t`` covers samples ``[t*hop, t*hop + window_size)``; samples past
    the end of the signal are zero. There are ``ceil(len / hop)`` frames, so
    frame ``t`` starts at ``t * hop / sample_rate`` seconds.

    Returns
    -------
    np.ndarray
        Array of shape ``(n_frames, window_size)``.
    """
    if not (window_size >= hop >= 1):
        raise ValueError(f"need window_size >= hop >= 1, got {window_size}, {hop}")
    x = w.samples
    count = n_frames(len(x), hop)
    if count == 0:
        return np.zeros((0, window_size))
    padded = np.zeros((count - 1) * hop + window_size)
    padded[: len(x)] = x
    view = np.lib.stride_tricks.sliding_window_view(padded, window_size)
    return view[::hop][:count].copy()
