"""z-CFP: combined frequency and periodicity with a growing-sinusoid cepstrum.

Per frame the pipeline is::

    S      = |STFT|                                  (stored channel 0)
    S~     = exp(k n) * highpass(S ** gamma_gc)      n = one-sided bin index
    C      = DFT(S~)                                 real: S~ is mirrored
    GC~    = |C|                                     (stored channel 1)
    GCoS~  = |DFT(highpass_quef(max(C, 0) ** gamma_gcos))|  (stored channel 2)

and every channel is mapped onto a log-frequency axis. ``k = 0`` gives the
plain CFP.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.signal

from .audio_io import DEFAULT_SAMPLE_RATE, Waveform, frame_signal

# exp(80) ~ 5.5e34; past this the gain swamps float32 storage
MAX_EXPONENT = 80.0


@dataclass(frozen=True)
class CfpParams:
    k: float = 0.0006
    gamma_s: float = 1.0
    gamma_gc: float = 0.24
    gamma_gcos: float = 0.6
    hp_cutoff_freq: float = 32.5
    hp_cutoff_quef: float = 1.0 / 2050.0
    n_log_bins: int = 360
    bins_per_octave: int = 60
    f_min: float = 32.5
    f_max: float = 2050.0
    window_size: int = 768
    hop: int = 80
    sample_rate: int = DEFAULT_SAMPLE_RATE
    window_fn: str = "hann"

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")
        if not 0 < self.f_min < self.f_max:
            raise ValueError(f"need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")
        if self.n_log_bins < 1 or self.bins_per_octave < 1:
            raise ValueError("n_log_bins and bins_per_octave must be positive")
        # f_max is the nominal stop: the top center may overshoot it by < 1 bin
        top = self.f_min * 2.0 ** ((self.n_log_bins - 1) / self.bins_per_octave)
        if top >= self.f_max * 2.0 ** (1.0 / self.bins_per_octave):
            raise ValueError(
                f"{self.n_log_bins} bins at {self.bins_per_octave}/octave from "
                f"{self.f_min} Hz reach {top:.1f} Hz, more than a bin above f_max={self.f_max}"
            )
        if self.window_size % 2:
            raise ValueError(f"window_size must be even, got {self.window_size}")

    def with_k(self, k: float) -> "CfpParams":
        return replace(self, k=k)

    def log_bin_freqs(self) -> np.ndarray:
        n = np.arange(self.n_log_bins)
        return self.f_min * 2.0 ** (n / self.bins_per_octave)


@dataclass(frozen=True)
class Spectrogram:
    values: np.ndarray  # (T, N) magnitudes
    bin_freqs: np.ndarray  # (N,) Hz
    frame_times: np.ndarray  # (T,) s


@dataclass(frozen=True)
class CfpTensor:
    values: np.ndarray  # (3, T, F)
    log_bin_freqs: np.ndarray
    frame_times: np.ndarray

    @property
    def frame_period(self) -> float:
        if len(self.frame_times) > 1:
            return float(self.frame_times[1] - self.frame_times[0])
        return float("nan")


# ----------------------------------------------------------------------
# per-layer operations
# ----------------------------------------------------------------------


def stft_magnitude(frames: np.ndarray, window_fn="hann", sample_rate: int = DEFAULT_SAMPLE_RATE,
                   hop: int | None = None) -> Spectrogram:
    """One-sided magnitude spectrum of each windowed frame.

    ``window_fn`` is a scipy window name, an array of length W, or None for
    a rectangular window.
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    width = frames.shape[1]
    if window_fn is None:
        window = np.ones(width)
    elif isinstance(window_fn, str):
        window = scipy.signal.get_window(window_fn, width, fftbins=True)
    else:
        window = np.asarray(window_fn, dtype=np.float64)
    values = np.abs(np.fft.rfft(frames * window, axis=1))
    bin_freqs = np.arange(width // 2 + 1) * sample_rate / width
    hop = width if hop is None else hop
    frame_times = np.arange(frames.shape[0]) * hop / sample_rate
    return Spectrogram(values, bin_freqs, frame_times)


def rescale(s: np.ndarray, gamma: float) -> np.ndarray:
    """Power-law compression ``max(s, 0) ** gamma``."""
    s = np.maximum(np.asarray(s, dtype=np.float64), 0.0)
    if gamma == 1:
        return s
    return s**gamma


def growth_gain(n_bins: int, k: float) -> np.ndarray:
    """``exp(k * n)`` for n = 0..n_bins-1."""
    if k * (n_bins - 1) > MAX_EXPONENT:
        raise ValueError(
            f"k={k} too large: exp(k * {n_bins - 1}) exceeds exp({MAX_EXPONENT:g})"
        )
    return np.exp(k * np.arange(n_bins))


def z_modify(s: np.ndarray, k: float) -> np.ndarray:
    """Multiply bin ``n`` of each row by ``exp(k n)``."""
    s = np.asarray(s, dtype=np.float64)
    return s * growth_gain(s.shape[-1], k)


def _dft(x: np.ndarray) -> np.ndarray:
    return np.fft.fft(np.asarray(x, dtype=np.float64), axis=-1, norm="ortho")


def generalized_cepstrum(s_mod: np.ndarray) -> np.ndarray:
    """Magnitude of the (orthonormal) DFT along the last axis.

    With the orthonormal scaling ``|F^-1(x)| == |F(x)|`` for real ``x``.
    """
    return np.abs(_dft(s_mod))


def high_pass(rows: np.ndarray, cutoff_idx: int) -> np.ndarray:
    """Zero the lowest ``cutoff_idx`` entries of each row (one-sided axis)."""
    out = np.array(rows, dtype=np.float64, copy=True)
    out[..., :cutoff_idx] = 0.0
    return out


def high_pass_symmetric(rows: np.ndarray, cutoff_idx: int) -> np.ndarray:
    """Zero entries within ``cutoff_idx`` of index 0 on a circular axis."""
    out = high_pass(rows, cutoff_idx)
    if cutoff_idx > 1:
        out[..., -(cutoff_idx - 1):] = 0.0
    return out


def mirror_spectrum(one_sided: np.ndarray) -> np.ndarray:
    """Rebuild the length-W even-symmetric spectrum from W/2 + 1 bins."""
    one_sided = np.asarray(one_sided)
    return np.concatenate([one_sided, one_sided[..., -2:0:-1]], axis=-1)


def generalized_cepstrum_of_spectrum(cepstrum: np.ndarray, params: CfpParams) -> np.ndarray:
    """Second CFP layer: rectify and compress, high-pass in quefrency, transform back.

    ``cepstrum`` is the full circular cepstrum (length W). Pass the signed
    real cepstrum so that ``rescale`` drops its negative lobes; a magnitude
    input lets the low-quefrency ripple outweigh the fundamental. The
    result is on the linear frequency axis with the same length.
    """
    quef_cut = int(round(params.hp_cutoff_quef * params.sample_rate))
    layer = high_pass_symmetric(rescale(cepstrum, params.gamma_gcos), quef_cut)
    return generalized_cepstrum(layer)


# ----------------------------------------------------------------------
# log-frequency mapping
# ----------------------------------------------------------------------


def log_mapping_matrix(source_freqs: np.ndarray, params: CfpParams,
                       sample_rate: int | None = None) -> np.ndarray:
    """Triangular-kernel averaging weights from ``source_freqs`` onto log bins.

    Row ``n`` of the returned ``(F, N)`` matrix sums to one, or is all zero
    when the target center lies outside the source axis. The kernel
    half-width is the larger of the target bin spacing and the source
    spacing around the center, so every covered center sees at least one
    source bin.
    """
    sample_rate = params.sample_rate if sample_rate is None else sample_rate
    if params.f_max > sample_rate / 2:
        raise ValueError(
            f"f_max={params.f_max} Hz is above the Nyquist frequency {sample_rate / 2} Hz"
        )
    src = np.asarray(source_freqs, dtype=np.float64)
    order = np.argsort(src)
    sorted_src = src[order]
    if np.any(np.diff(sorted_src) <= 0):
        raise ValueError("source axis must be strictly monotone")

    centers = params.log_bin_freqs()
    target_spacing = centers * (2.0 ** (1.0 / params.bins_per_octave) - 1.0)
    idx = np.clip(np.searchsorted(sorted_src, centers), 1, len(sorted_src) - 1)
    source_spacing = sorted_src[idx] - sorted_src[idx - 1]
    half_width = np.maximum(target_spacing, source_spacing)

    dist = np.abs(sorted_src[None, :] - centers[:, None])
    weights = np.clip(1.0 - dist / half_width[:, None], 0.0, None)
    covered = (centers >= sorted_src[0]) & (centers <= sorted_src[-1])
    weights[~covered] = 0.0
    totals = weights.sum(axis=1, keepdims=True)
    weights = np.divide(weights, totals, out=np.zeros_like(weights), where=totals > 0)

    matrix = np.zeros_like(weights)
    matrix[:, order] = weights
    return matrix


def to_log_frequency(rows: np.ndarray, source_freqs: np.ndarray, params: CfpParams,
                     sample_rate: int | None = None) -> np.ndarray:
    """Map rows on a monotone Hz axis onto the ``n_log_bins`` log axis."""
    matrix = log_mapping_matrix(source_freqs, params, sample_rate)
    return np.asarray(rows, dtype=np.float64) @ matrix.T


def quefrency_freqs(n_quef: int, sample_rate: int) -> np.ndarray:
    """Hz equivalent of quefrency bins 1..n_quef-1 (bin q is q / sample_rate s)."""
    return sample_rate / np.arange(1, n_quef)


# ----------------------------------------------------------------------
# full pipeline
# ----------------------------------------------------------------------


def _layers(w: Waveform, params: CfpParams, gain: np.ndarray | None):
    if w.sample_rate != params.sample_rate:
        raise ValueError(
            f"waveform at {w.sample_rate} Hz, params expect {params.sample_rate} Hz; resample first"
        )
    frames = frame_signal(w, params.window_size, params.hop)
    spec = stft_magnitude(frames, params.window_fn, params.sample_rate, params.hop)
    freq_cut = int(round(params.hp_cutoff_freq * params.window_size / params.sample_rate))

    s = rescale(spec.values, params.gamma_s)
    s_mod = high_pass(rescale(spec.values, params.gamma_gc), freq_cut)
    if gain is not None:
        s_mod = s_mod * gain
    ceps = _dft(mirror_spectrum(s_mod))
    gc = np.abs(ceps)
    gcos = generalized_cepstrum_of_spectrum(ceps.real, params)
    return spec, s, s_mod, gc, gcos


def modified_spectrum(w: Waveform, params: CfpParams) -> np.ndarray:
    """The pre-transform spectrum S~ of each frame, shape (T, W/2 + 1)."""
    n_bins = params.window_size // 2 + 1
    return _layers(w, params, growth_gain(n_bins, params.k))[2]


def _stack(spec: Spectrogram, s, gc, gcos, params: CfpParams) -> CfpTensor:
    half = params.window_size // 2 + 1
    freq_map = log_mapping_matrix(spec.bin_freqs, params)
    quef_map = log_mapping_matrix(quefrency_freqs(half, params.sample_rate), params)
    values = np.stack([
        s @ freq_map.T,
        gc[:, 1:half] @ quef_map.T,
        gcos[:, :half] @ freq_map.T,
    ])
    # matmul roundoff can leave tiny negatives
    np.maximum(values, 0.0, out=values)
    return CfpTensor(values, params.log_bin_freqs(), spec.frame_times)


def compute_zcfp(w: Waveform, params: CfpParams = CfpParams()) -> CfpTensor:
    """z-CFP representation of ``w``; shape (3, T, n_log_bins)."""
    n_bins = params.window_size // 2 + 1
    spec, s, _, gc, gcos = _layers(w, params, growth_gain(n_bins, params.k))
    return _stack(spec, s, gc, gcos, params)


def compute_cfp(w: Waveform, params: CfpParams = CfpParams()) -> CfpTensor:
    """Plain CFP: the same pipeline with no growth gain (``params.k`` ignored)."""
    spec, s, _, gc, gcos = _layers(w, params, None)
    return _stack(spec, s, gc, gcos, params)


# ----------------------------------------------------------------------
# tensor file format
# ----------------------------------------------------------------------

MAGIC = b"ZCFP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdII")


def write_tensor(path, tensor: CfpTensor, frame_period: float, chunk_frames: int = 0,
                 valid_frames: int | None = None) -> None:
    """Write a CfpTensor in the little-endian ZCFP layout.

    Header: magic, u32 version, u32 dims (3, T, F), f64 frame period,
    u32 chunk length (0 = unchunked), u32 count of real (unpadded) frames.
    Then F f64 bin centers and 3*T*F f32 values, row-major.
    """
    c, t, f = tensor.values.shape
    valid = t if valid_frames is None else valid_frames
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, c, t, f, frame_period, chunk_frames, valid))
        fh.write(np.asarray(tensor.log_bin_freqs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(tensor.values, dtype="<f4").tobytes())


def read_tensor(path) -> tuple[CfpTensor, dict]:
    """Inverse of :func:`write_tensor`. Returns the tensor and header fields."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, c, t, f, period, chunk, valid = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    expected = offset + 8 * f + 4 * c * t * f
    if len(data) != expected:
        raise ValueError(f"{path}: size {len(data)} does not match header ({expected})")
    freqs = np.frombuffer(data, dtype="<f8", count=f, offset=offset)
    values = np.frombuffer(data, dtype="<f4", count=c * t * f, offset=offset + 8 * f)
    values = values.reshape(c, t, f).astype(np.float64)
    times = np.arange(t) * period
    header = {"version": version, "frame_period": period, "chunk_frames": chunk,
              "valid_frames": valid}
    return CfpTensor(values, freqs.copy(), times), header


def write_tensor_csv(path, tensor: CfpTensor) -> None:
    """Debug dump: one line per (channel, frame) with time then F values."""
    names = ("S", "GC", "GCoS")
    with open(Path(path), "w") as fh:
        fh.write("channel,time," + ",".join(f"{x:.17g}" for x in tensor.log_bin_freqs) + "\n")
        for c, name in enumerate(names):
            for t, row in zip(tensor.frame_times, tensor.values[c]):
                fh.write(f"{name},{t:.17g}," + ",".join(f"{x:.17g}" for x in row) + "\n")
