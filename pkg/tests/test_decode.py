import numpy as np
import pytest
from hypothesis import given, strategies as st

from melody_kit.cfp import CfpParams
from melody_kit.decode import (
    PitchTrack,
    argmax_pitch,
    burst_profile,
    decode_grid,
    frame_times,
    load_track,
    median_filter_voicing,
    merge_median,
    save_track,
    smooth_grid,
)

from oracles import bursts_quadratic, median_sort

BINS = CfpParams().log_bin_freqs()
binary = st.lists(st.integers(0, 1), min_size=0, max_size=60)


def track(freqs):
    return PitchTrack(frame_times(len(freqs)), np.asarray(freqs, dtype=float))


class TestPitchTrack:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            track([100.0, -1.0])

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            PitchTrack(np.array([0.0, 0.0]), np.zeros(2))

    def test_file_round_trip(self, tmp_path, rng):
        t = track(np.where(rng.random(30) > 0.5, rng.uniform(50, 900, 30), 0.0))
        save_track(tmp_path / "t.txt", t)
        back = load_track(tmp_path / "t.txt")
        assert np.array_equal(back.times, t.times)
        assert np.array_equal(back.freqs, t.freqs)

    def test_whitespace_columns(self, tmp_path):
        (tmp_path / "t.txt").write_text("0.00 0\n0.01   220.5\n")
        assert np.array_equal(load_track(tmp_path / "t.txt").freqs, [0, 220.5])

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.txt").write_text("")
        assert len(load_track(tmp_path / "e.txt")) == 0


class TestDecodeGrid:
    def test_unvoiced(self):
        out = decode_grid(np.zeros((5, 361)), BINS)
        assert not out.voiced.any()

    def test_one_hot(self):
        grid = np.zeros((1, 361))
        grid[0, 0] = 0.9
        grid[0, 1 + 100] = 1.0
        assert decode_grid(grid, BINS).freqs[0] == pytest.approx(32.5 * 2 ** (100 / 60), rel=1e-15)

    def test_tie_goes_low(self):
        grid = np.zeros((1, 361))
        grid[0, 0] = 1.0
        grid[0, [1 + 40, 1 + 200]] = 0.5
        assert decode_grid(grid, BINS).freqs[0] == BINS[40]

    def test_bin_mismatch(self):
        with pytest.raises(ValueError, match="360"):
            decode_grid(np.zeros((3, 100)), BINS)

    @pytest.mark.parametrize("thr", [0.0, 1.0])
    def test_threshold_range(self, thr):
        with pytest.raises(ValueError):
            decode_grid(np.zeros((3, 361)), BINS, threshold=thr)

    @given(st.integers(0, 2**31), st.floats(0.01, 0.98), st.floats(0.01, 0.98))
    def test_threshold_monotone(self, seed, t1, t2):
        grid = np.random.default_rng(seed).random((30, 361))
        lo, hi = sorted((t1, t2))
        assert np.all(decode_grid(grid, BINS, hi).voiced <= decode_grid(grid, BINS, lo).voiced)

    def test_argmax_pitch_ignores_voicing(self, rng):
        grid = rng.random((10, 361))
        grid[:, 0] = 0
        assert argmax_pitch(grid, BINS).voiced.all()


class TestMedian:
    def test_hand_example(self):
        assert np.array_equal(median_filter_voicing([0, 1, 0, 0, 0], 3), [0, 0, 0, 0, 0])

    @pytest.mark.parametrize("value", [0, 1])
    def test_constant(self, value):
        v = np.full(20, value)
        assert np.array_equal(median_filter_voicing(v, 7), v)

    def test_wide_window_majority(self):
        v = np.array([1, 1, 0, 1, 0, 1, 1])
        assert np.array_equal(median_filter_voicing(v, 2 * len(v) + 1), np.ones(7))

    @pytest.mark.parametrize("size", [2, 4, 1])
    def test_bad_size(self, size):
        with pytest.raises(ValueError):
            median_filter_voicing([0, 1, 0], size)

    def test_non_binary(self):
        with pytest.raises(ValueError):
            median_filter_voicing([0, 2, 0], 3)

    @given(binary, st.sampled_from([3, 5, 7, 15, 31]))
    def test_matches_sort_oracle(self, v, size):
        out = median_filter_voicing(np.array(v, dtype=int), size)
        assert np.array_equal(out, median_sort(v, size) if v else np.zeros(0))


class TestMerge:
    def test_same_voicing(self, rng):
        orig = track(np.where(rng.random(10) > 0.5, 200.0, 0.0))
        out = merge_median(orig, orig.voiced, track(np.full(10, 440.0)))
        assert np.array_equal(out.freqs, orig.freqs)

    def test_fill(self):
        out = merge_median(track([0.0]), [1], track([440.0]))
        assert out.freqs[0] == 440.0

    def test_hand_table(self):
        orig = track([0, 220, 0, 0, 330])
        filtered = [1, 1, 0, 1, 0]
        fallback = track([100, 200, 300, 400, 500])
        assert np.array_equal(merge_median(orig, filtered, fallback).freqs, [100, 220, 0, 400, 330])

    def test_misaligned(self):
        with pytest.raises(ValueError, match="misaligned"):
            merge_median(track([0, 1.0]), [1], track([1.0, 1.0]))

    def test_smooth_grid_fills_gap(self):
        grid = np.zeros((5, 361))
        grid[:, 0] = [1, 1, 0, 1, 1]
        grid[:, 1 + 120] = 1
        out = smooth_grid(grid, BINS, 3)
        assert np.all(out.freqs == BINS[120])


class TestBurstProfile:
    def test_unit(self):
        prof = burst_profile([0, 1, 0])
        assert prof.vocal_bursts == [(1, 1)] and prof.nonvocal_bursts == []

    @pytest.mark.parametrize("value", [0, 1])
    def test_constant(self, value):
        assert burst_profile(np.full(30, value)).count == 0

    def test_boundary_runs_excluded(self):
        assert burst_profile([1, 0, 0, 0, 0, 0, 0, 0, 0]).count == 0

    def test_length_limits(self):
        v = [0] + [1] * 28 + [0] + [0] * 3 + [1] * 29 + [0]
        assert burst_profile(v).vocal_bursts == [(1, 28)]
        v = [1] + [0] * 5 + [1, 1] + [0] * 6 + [1]
        assert burst_profile(v).nonvocal_bursts == [(1, 5)]

    def test_counts_by_length(self):
        prof = burst_profile([0, 1, 0, 1, 1, 0, 1, 0])
        assert prof.counts_by_length("v") == {1: 2, 2: 1}

    @given(st.lists(st.integers(0, 1), min_size=50, max_size=50), st.integers(3, 30), st.integers(3, 10))
    def test_matches_quadratic_scan(self, v, M_v, M_nv):
        prof = burst_profile(v, M_v, M_nv)
        vocal, nonvocal = bursts_quadratic(v, M_v, M_nv)
        assert prof.vocal_bursts == vocal
        assert prof.nonvocal_bursts == nonvocal
