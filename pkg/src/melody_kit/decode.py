"""Prediction grid decoding, median-filter voicing baseline and burst profiling."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FRAME_PERIOD = 0.01


@dataclass(frozen=True)
class PitchTrack:
    """Frame times (s) and frequencies (Hz); 0 Hz marks an unvoiced frame."""

    times: np.ndarray
    freqs: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        freqs = np.asarray(self.freqs, dtype=np.float64)
        if times.shape != freqs.shape or times.ndim != 1:
            raise ValueError(f"times {times.shape} and freqs {freqs.shape} must be equal 1-D")
        if np.any(freqs < 0):
            raise ValueError("frequencies must be >= 0 (0 = unvoiced)")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "freqs", freqs)

    @property
    def voiced(self) -> np.ndarray:
        return self.freqs > 0

    def __len__(self):
        return len(self.times)


def load_track(path) -> PitchTrack:
    """Read a two-column ``time freq`` text file (MIREX melody format)."""
    path = Path(path)
    if not path.read_text().strip():
        return PitchTrack(np.zeros(0), np.zeros(0))
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected two columns, got {data.shape[1]}")
    return PitchTrack(data[:, 0], data[:, 1])


def save_track(path, track: PitchTrack) -> None:
    with open(Path(path), "w") as fh:
        for t, f in zip(track.times, track.freqs):
            fh.write(f"{t:.17g}\t{f:.17g}\n")


def frame_times(n: int, period: float = FRAME_PERIOD) -> np.ndarray:
    return np.arange(n) * period


def decode_grid(pred, log_bin_freqs, threshold: float = 0.5,
                period: float = FRAME_PERIOD) -> PitchTrack:
    """Turn a T x (F+1) grid into a pitch track.

    A frame is voiced when column 0 reaches ``threshold``; its pitch is the
    argmax of columns 1..F (first maximum on ties, i.e. the lowest bin).
    """
    pred = np.asarray(pred, dtype=np.float64)
    freqs_table = np.asarray(log_bin_freqs, dtype=np.float64)
    if pred.ndim != 2 or pred.shape[1] != len(freqs_table) + 1:
        raise ValueError(
            f"grid of shape {pred.shape} does not match {len(freqs_table)} frequency bins"
        )
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    pitch = freqs_table[np.argmax(pred[:, 1:], axis=1)] if len(pred) else np.zeros(0)
    voiced = pred[:, 0] >= threshold
    return PitchTrack(frame_times(len(pred), period), np.where(voiced, pitch, 0.0))


def argmax_pitch(pred, log_bin_freqs, period: float = FRAME_PERIOD) -> PitchTrack:
    """Pitch track that ignores the voicing column (every frame voiced)."""
    pred = np.asarray(pred, dtype=np.float64)
    all_voiced = np.column_stack([np.ones(len(pred)), pred[:, 1:]])
    return decode_grid(all_voiced, log_bin_freqs, 0.5, period)


def median_filter_voicing(v, size: int) -> np.ndarray:
    """Sliding median of a binary voicing sequence, edges replicated."""
    if size < 3 or size % 2 == 0:
        raise ValueError(f"median size must be odd and >= 3, got {size}")
    v = np.asarray(v)
    if v.size and not np.isin(v, (0, 1)).all():
        raise ValueError("voicing sequence must be binary")
    if v.size == 0:
        return v.astype(np.int64)
    # binary median is a majority vote over the edge-padded window;
    # scipy.ndimage's "nearest" mode misbehaves once size > ~2 * len
    half = size // 2
    padded = np.pad(v.astype(np.int64), half, mode="edge")
    ones = np.convolve(padded, np.ones(size, dtype=np.int64), mode="valid")
    return (ones > half).astype(np.int64)


def merge_median(original: PitchTrack, filtered_voicing, fallback_pitch: PitchTrack) -> PitchTrack:
    """Keep voiced frames of ``original``; fill frames the filter voices from ``fallback_pitch``."""
    filtered = np.asarray(filtered_voicing).astype(bool)
    if not (len(original) == len(filtered) == len(fallback_pitch)):
        raise ValueError(
            f"misaligned inputs: {len(original)}, {len(filtered)}, {len(fallback_pitch)} frames"
        )
    if not np.allclose(original.times, fallback_pitch.times, atol=1e-9):
        raise ValueError("original and fallback tracks are on different time grids")
    fill = ~original.voiced & filtered
    freqs = np.where(original.voiced, original.freqs, np.where(fill, fallback_pitch.freqs, 0.0))
    return PitchTrack(original.times, freqs)


def smooth_grid(pred, log_bin_freqs, size: int, threshold: float = 0.5,
                period: float = FRAME_PERIOD) -> PitchTrack:
    """Decode, median-filter the voicing and merge: the median baseline end to end."""
    original = decode_grid(pred, log_bin_freqs, threshold, period)
    filtered = median_filter_voicing(original.voiced.astype(np.int64), size)
    return merge_median(original, filtered, argmax_pitch(pred, log_bin_freqs, period))


@dataclass
class BurstProfile:
    vocal_bursts: list = field(default_factory=list)  # (start, length)
    nonvocal_bursts: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.vocal_bursts) + len(self.nonvocal_bursts)

    def counts_by_length(self, kind: str = "v") -> dict:
        runs = self.vocal_bursts if kind == "v" else self.nonvocal_bursts
        out: dict = {}
        for _, length in runs:
            out[length] = out.get(length, 0) + 1
        return dict(sorted(out.items()))


def _runs(v: np.ndarray):
    """Maximal runs as (value, start, length)."""
    if v.size == 0:
        return []
    edges = np.flatnonzero(np.diff(v)) + 1
    starts = np.concatenate([[0], edges])
    lengths = np.diff(np.concatenate([starts, [v.size]]))
    return [(int(v[s]), int(s), int(n)) for s, n in zip(starts, lengths)]


def burst_profile(v, M_v: int = 30, M_nv: int = 7) -> BurstProfile:
    """Interior runs short enough to be penalized by the stability loss.

    Vocal runs of length <= M_v - 2 and non-vocal runs of length <= M_nv - 2
    count when the opposite state flanks them on both sides; runs touching
    either end of the sequence are ignored.
    """
    v = np.asarray(v).astype(np.int64)
    if v.size and not np.isin(v, (0, 1)).all():
        raise ValueError("voicing sequence must be binary")
    profile = BurstProfile()
    for value, start, length in _runs(v):
        if start == 0 or start + length == v.size:
            continue
        if value == 1 and length <= M_v - 2:
            profile.vocal_bursts.append((start, length))
        elif value == 0 and length <= M_nv - 2:
            profile.nonvocal_bursts.append((start, length))
    return profile
