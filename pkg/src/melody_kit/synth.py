"""Synthetic signals, label grids and burst instances for tests and scripts."""
from __future__ import annotations

import numpy as np

from .audio_io import DEFAULT_SAMPLE_RATE, Waveform
from .cfp import CfpTensor
from .decode import FRAME_PERIOD, PitchTrack, burst_profile, frame_times


def harmonic_tone(f0: float, duration: float, sample_rate: int = DEFAULT_SAMPLE_RATE,
                  n_harmonics: int | None = None, decay: float = 2.0,
                  amplitude: float = 0.5) -> Waveform:
    """Sum of harmonics with amplitude ``1 / h**decay``, below Nyquist, peak-normalised."""
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    top = int((sample_rate / 2 - 1) // f0)
    n = top if n_harmonics is None else min(n_harmonics, top)
    x = sum(np.sin(2 * np.pi * f0 * h * t) / h**decay for h in range(1, n + 1))
    peak = np.max(np.abs(x)) if len(t) else 1.0
    return Waveform(amplitude * x / peak, sample_rate)


def synthetic_melody(duration: float = 5.0, sample_rate: int = DEFAULT_SAMPLE_RATE,
                     seed: int = 0) -> tuple[Waveform, PitchTrack]:
    """Notes separated by rests over a quiet noise floor, with its reference track.

    Notes are harmonic tones (1/h decay) with a little vibrato. Returns the
    waveform and the reference pitch track on the 0.01 s grid.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    f_inst = np.zeros(n)
    pos = int(0.2 * sample_rate)
    while pos < n:
        note = int(rng.uniform(0.35, 0.8) * sample_rate)
        rest = int(rng.uniform(0.15, 0.35) * sample_rate)
        midi = rng.integers(55, 76)
        f_inst[pos:pos + note] = 440.0 * 2 ** ((midi - 69) / 12)
        pos += note + rest

    t = np.arange(n) / sample_rate
    voiced = f_inst > 0
    f_inst = np.where(voiced, f_inst * 2 ** (0.2 * np.sin(2 * np.pi * 5.5 * t) / 12), 0.0)
    phase = 2 * np.pi * np.cumsum(f_inst) / sample_rate
    x = np.zeros(n)
    for h in range(1, 16):
        ok = voiced & (h * f_inst < sample_rate / 2 - 100)
        x += np.where(ok, np.sin(h * phase) / h, 0.0)
    x = 0.4 * x / np.max(np.abs(x)) + 0.003 * rng.standard_normal(n)

    times = frame_times(int(np.ceil(duration / FRAME_PERIOD)))
    idx = np.minimum((times * sample_rate).astype(int), n - 1)
    return Waveform(x, sample_rate), PitchTrack(times, f_inst[idx])


def label_grid(track: PitchTrack, log_bin_freqs) -> np.ndarray:
    """One-hot T x (F+1) label: voicing in column 0, nearest log bin otherwise."""
    centers = np.asarray(log_bin_freqs, dtype=np.float64)
    grid = np.zeros((len(track), len(centers) + 1))
    voiced = track.voiced
    grid[voiced, 0] = 1.0
    if voiced.any():
        cents = np.abs(np.log2(track.freqs[voiced][:, None] / centers[None, :]))
        grid[np.flatnonzero(voiced), 1 + np.argmin(cents, axis=1)] = 1.0
    return grid


def salience_grid(tensor: CfpTensor, floor_db: float = -30.0) -> np.ndarray:
    """A model-free stand-in for network output built from a z-CFP tensor.

    Pitch salience is the product of the GC and GCoS channels, normalised
    per frame. Voicing is a logistic of frame energy relative to the
    loudest frame, centred at ``floor_db``. All values lie in [0, 1].
    """
    _, gc, gcos = tensor.values
    sal = gc * gcos
    peak = sal.max(axis=1, keepdims=True)
    sal = np.divide(sal, peak, out=np.zeros_like(sal), where=peak > 0)
    energy = np.sum(tensor.values[0] ** 2, axis=1)
    ref = energy.max() if energy.size and energy.max() > 0 else 1.0
    db = 10 * np.log10(np.maximum(energy / ref, 1e-12))
    voicing = 1.0 / (1.0 + np.exp(-(db - floor_db) / 2.0))
    return np.column_stack([voicing, sal])


def planted_bursts(rng: np.random.Generator, T: int = 128, n_bursts: int = 5,
                   M_v: int = 30, M_nv: int = 7, min_segment: int = 30,
                   max_segment: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """A burst-free binary label and a copy of it with ``n_bursts`` planted bursts.

    Label segments are at least ``min_segment`` frames. Vocal bursts of
    1..M_v-2 frames go into non-vocal segments and non-vocal bursts of
    1..M_nv-2 frames into vocal ones, each with two label frames of margin.
    """
    if min_segment <= M_v - 2:
        raise ValueError("label segments must be longer than the penalised burst length")
    label = np.zeros(T, dtype=np.int64)
    pos, state = 0, int(rng.integers(2))
    while pos < T:
        n = int(rng.integers(min_segment, max_segment + 1))
        label[pos:pos + n] = state
        state, pos = 1 - state, pos + n

    bursty = label.copy()
    planted = attempts = 0
    while planted < n_bursts:
        attempts += 1
        if attempts > 10_000:
            raise RuntimeError(f"could not plant {n_bursts} bursts in {T} frames")
        start = int(rng.integers(2, T - 3))
        longest = (M_v - 2) if label[start] == 0 else (M_nv - 2)
        length = int(rng.integers(1, longest + 1))
        lo, hi = start - 2, start + length + 2
        if hi > T or np.any(label[lo:hi] != label[start]) or np.any(bursty[lo:hi] != label[lo:hi]):
            continue
        bursty[start:start + length] = 1 - label[start]
        planted += 1
    assert burst_profile(label, M_v, M_nv).count == 0
    return bursty, label
