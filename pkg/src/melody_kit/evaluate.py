"""Melody extraction metrics: VR, VFA, RPA, RCA, OA.

Conventions follow the usual melody-evaluation definitions: 0 Hz marks an
unvoiced frame, pitch is correct within 50 cents (inclusive), chroma folds
the cent error into one octave, and raw pitch/chroma accuracy count every
reference-voiced frame regardless of the estimate's voicing decision.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .decode import PitchTrack

CENT_TOLERANCE = 50.0
# absorbs log2 roundoff so a ratio of exactly 2**(50/1200) is still correct
_CENT_SLACK = 1e-9


@dataclass(frozen=True)
class EvalReport:
    vr: float
    vfa: float
    rpa: float
    rca: float
    oa: float
    n_frames: int
    n_ref_voiced: int
    n_ref_unvoiced: int
    n_voiced_hits: int
    n_false_alarms: int
    n_pitch_correct: int
    n_chroma_correct: int
    n_overall_correct: int
    no_ref_voiced: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def resample_track(track: PitchTrack, grid) -> PitchTrack:
    """Nearest-frame resampling of ``track`` onto ``grid``.

    Grid times further than half a frame outside the track's extent are
    unvoiced. Equidistant ties go to the earlier frame.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if len(track) == 0:
        return PitchTrack(grid, np.zeros_like(grid))
    times = track.times
    if len(times) == len(grid) and np.allclose(times, grid, atol=1e-9):
        return PitchTrack(grid, track.freqs.copy())

    half = 0.5 * (np.median(np.diff(times)) if len(times) > 1 else 0.0)
    right = np.clip(np.searchsorted(times, grid), 1, max(len(times) - 1, 1))
    left = right - 1
    if len(times) == 1:
        nearest = np.zeros(len(grid), dtype=int)
    else:
        d_left = grid - times[left]
        d_right = times[right] - grid
        nearest = np.where(d_right < d_left - 1e-9, right, left)
    outside = (grid < times[0] - half - 1e-9) | (grid > times[-1] + half + 1e-9)
    freqs = np.where(outside, 0.0, track.freqs[nearest])
    return PitchTrack(grid, freqs)


def cent_error(ref_hz, est_hz) -> np.ndarray:
    """``|1200 log2(est / ref)|``; infinite wherever either side is 0 Hz."""
    ref_hz = np.asarray(ref_hz, dtype=np.float64)
    est_hz = np.asarray(est_hz, dtype=np.float64)
    out = np.full(ref_hz.shape, np.inf)
    ok = (ref_hz > 0) & (est_hz > 0)
    out[ok] = np.abs(1200.0 * np.log2(est_hz[ok] / ref_hz[ok]))
    return out


def chroma_error(ref_hz, est_hz) -> np.ndarray:
    """Cent error after folding any whole number of octaves."""
    err = cent_error(ref_hz, est_hz)
    finite = np.isfinite(err)
    err[finite] = np.abs(err[finite] - 1200.0 * np.round(err[finite] / 1200.0))
    return err


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def evaluate(ref: PitchTrack, est: PitchTrack) -> EvalReport:
    """Score ``est`` against ``ref`` after resampling ``est`` onto the reference grid."""
    if len(ref) == 0:
        raise ValueError("reference track has no frames")
    est = resample_track(est, ref.times)
    ref_v = ref.voiced
    est_v = est.voiced
    ref_u = ~ref_v

    n_v = int(ref_v.sum())
    n_u = int(ref_u.sum())
    pitch_ok = ref_v & (cent_error(ref.freqs, est.freqs) <= CENT_TOLERANCE + _CENT_SLACK)
    chroma_ok = ref_v & (chroma_error(ref.freqs, est.freqs) <= CENT_TOLERANCE + _CENT_SLACK)

    hits = int((ref_v & est_v).sum())
    false_alarms = int((ref_u & est_v).sum())
    n_pitch = int(pitch_ok.sum())
    n_chroma = int(chroma_ok.sum())
    n_overall = int((pitch_ok & est_v).sum() + (ref_u & ~est_v).sum())

    if n_v == 0:
        warnings.warn("reference has no voiced frames; VR, RPA and RCA reported as 0")
    return EvalReport(
        vr=_ratio(hits, n_v),
        vfa=_ratio(false_alarms, n_u),
        rpa=_ratio(n_pitch, n_v),
        rca=_ratio(n_chroma, n_v),
        oa=n_overall / len(ref),
        n_frames=len(ref),
        n_ref_voiced=n_v,
        n_ref_unvoiced=n_u,
        n_voiced_hits=hits,
        n_false_alarms=false_alarms,
        n_pitch_correct=n_pitch,
        n_chroma_correct=n_chroma,
        n_overall_correct=n_overall,
        no_ref_voiced=n_v == 0,
    )


METRICS = ("vr", "vfa", "rpa", "rca", "oa")


def mean_report(reports) -> dict:
    """Unweighted per-track mean of the five metrics."""
    reports = list(reports)
    return {m: float(np.mean([getattr(r, m) for r in reports])) for m in METRICS}
