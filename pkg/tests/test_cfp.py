import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from melody_kit.audio_io import Waveform, frame_signal
from melody_kit.cfp import (
    CfpParams,
    CfpTensor,
    compute_cfp,
    compute_zcfp,
    generalized_cepstrum,
    generalized_cepstrum_of_spectrum,
    growth_gain,
    high_pass_symmetric,
    log_mapping_matrix,
    mirror_spectrum,
    modified_spectrum,
    quefrency_freqs,
    read_tensor,
    rescale,
    stft_magnitude,
    to_log_frequency,
    write_tensor,
    write_tensor_csv,
    z_modify,
)
from melody_kit.synth import harmonic_tone

P = CfpParams()
SR, W = P.sample_rate, P.window_size
LIN = np.arange(W // 2 + 1) * SR / W


def band_energy(row, f, half_width=2):
    """Energy of the linear bins within ``half_width`` of frequency ``f``."""
    centre = int(round(f * W / SR))
    return float(np.sum(row[centre - half_width: centre + half_width + 1] ** 2))


class TestParams:
    def test_defaults(self):
        assert (P.k, P.n_log_bins, P.bins_per_octave, P.f_min, P.f_max) == (0.0006, 360, 60, 32.5, 2050)
        assert (P.window_size, P.hop, P.sample_rate) == (768, 80, 8000)

    def test_log_centres(self):
        f = P.log_bin_freqs()
        assert f[0] == 32.5
        assert f[60] == pytest.approx(65.0, rel=1e-15)
        assert f[359] == pytest.approx(32.5 * 2 ** (359 / 60), rel=1e-15)
        # the top centre lands less than one bin above the nominal stop
        assert 2050 < f[359] < 2050 * 2 ** (1 / 60)

    def test_rejects_negative_k(self):
        with pytest.raises(ValueError):
            CfpParams(k=-0.1)

    def test_rejects_odd_window(self):
        with pytest.raises(ValueError):
            CfpParams(window_size=767)

    def test_rejects_overlong_axis(self):
        with pytest.raises(ValueError):
            CfpParams(n_log_bins=400)


class TestStft:
    def test_zero_frame(self):
        assert not stft_magnitude(np.zeros((1, W))).values.any()

    def test_exact_bin_rectangular(self):
        n = np.arange(W)
        frame = np.cos(2 * np.pi * 37 * n / W)
        spec = stft_magnitude(frame[None], window_fn=None).values[0]
        assert np.argmax(spec) == 37
        assert spec[37] == pytest.approx(W / 2)
        assert np.delete(spec, 37).max() < 1e-9

    def test_parseval_one_sided(self, rng):
        frames = rng.standard_normal((4, W))
        spec = stft_magnitude(frames).values
        window = np.hanning(W + 1)[:-1]
        weights = np.full(W // 2 + 1, 2.0)
        weights[[0, -1]] = 1.0
        lhs = (spec**2 * weights).sum(axis=1)
        rhs = W * ((frames * window) ** 2).sum(axis=1)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-6)

    def test_axes(self):
        spec = stft_magnitude(np.zeros((3, W)), hop=80)
        assert spec.bin_freqs[0] == 0
        assert np.allclose(np.diff(spec.bin_freqs), SR / W)
        assert np.allclose(spec.frame_times, [0, 0.01, 0.02])


class TestRescale:
    def test_identity(self, rng):
        s = rng.random(10)
        assert np.array_equal(rescale(s, 1.0), s)

    def test_zero_stays_zero(self):
        assert rescale(np.array([0.0, 4.0]), 0.24)[0] == 0

    def test_example(self):
        np.testing.assert_allclose(rescale(np.array([1.0, 16.0]), 0.24), [1.0, 16**0.24])


class TestZModify:
    def test_k_zero_identity(self, rng):
        s = rng.random(385)
        assert np.array_equal(z_modify(s, 0.0), s)

    def test_top_bin_gain(self):
        # 385 one-sided bins, so the top raw index is 384
        assert growth_gain(385, 0.0006)[-1] == pytest.approx(np.exp(0.0006 * 384), rel=1e-15)
        assert np.exp(0.0006 * 385) == pytest.approx(1.2599, abs=1e-4)

    def test_monotone_gain(self):
        assert np.all(np.diff(growth_gain(385, 0.001)) > 0)

    def test_overflow_guard(self):
        with pytest.raises(ValueError, match="too large"):
            z_modify(np.ones(385), 0.3)


class TestGeneralizedCepstrum:
    def test_constant_is_impulse(self):
        out = generalized_cepstrum(np.full(64, 3.0))
        assert out[0] == pytest.approx(3.0 * 8.0)
        assert np.abs(out[1:]).max() < 1e-12

    def test_cosine_peaks(self):
        n = np.arange(128)
        out = generalized_cepstrum(np.cos(2 * np.pi * 9 * n / 128))
        assert set(np.argsort(out)[-2:]) == {9, 128 - 9}

    def test_inverse_equals_forward(self, rng):
        x = rng.standard_normal(200)
        inv = np.abs(np.fft.ifft(x, norm="ortho"))
        np.testing.assert_allclose(generalized_cepstrum(x), inv, atol=1e-9)


class TestGcos:
    def test_zero(self):
        assert not generalized_cepstrum_of_spectrum(np.zeros(W), P).any()

    def test_length(self, rng):
        assert generalized_cepstrum_of_spectrum(rng.random(W), P).shape == (W,)

    def test_high_pass_symmetric(self):
        out = high_pass_symmetric(np.ones(10), 3)
        assert np.array_equal(out, [0, 0, 0, 1, 1, 1, 1, 1, 0, 0])

    def test_comb_peak(self):
        tone = harmonic_tone(200.0, 1.0, n_harmonics=10, decay=0.0)
        gcos = compute_zcfp(tone, P).values[2, 20:-20].mean(axis=0)
        assert np.argmax(gcos) == np.argmin(np.abs(P.log_bin_freqs() - 200))


class TestLogMapping:
    def test_rows_normalised(self):
        m = log_mapping_matrix(LIN, P)
        np.testing.assert_allclose(m.sum(axis=1), 1.0, rtol=1e-12)
        assert (m >= 0).all()

    def test_constant_row(self):
        out = to_log_frequency(np.full((2, len(LIN)), 7.0), LIN, P)
        np.testing.assert_allclose(out, 7.0, rtol=1e-12)

    def test_quefrency_axis(self):
        q = quefrency_freqs(W // 2 + 1, SR)
        assert q[0] == SR and q[-1] == pytest.approx(SR / 384)
        m = log_mapping_matrix(q, P)
        covered = P.log_bin_freqs() >= q.min()
        np.testing.assert_allclose(m[covered].sum(axis=1), 1.0)
        assert not m[~covered].any()

    def test_impulse_lands_on_nearest_centre(self):
        centres = P.log_bin_freqs()
        row = np.zeros(len(LIN))
        row[48] = 1.0  # 500 Hz
        out = to_log_frequency(row, LIN, P)
        assert abs(centres[np.argmax(out)] - 500.0) < 500 * (2 ** (1 / 60) - 1)

    def test_unsupported_bins_zero(self):
        src = np.linspace(100, 1000, 50)
        m = log_mapping_matrix(src, P)
        centres = P.log_bin_freqs()
        assert not m[(centres < 100) | (centres > 1000)].any()

    def test_fmax_above_nyquist(self):
        with pytest.raises(ValueError, match="2050.*2000"):
            log_mapping_matrix(LIN, P, sample_rate=4000)

    def test_non_monotone_source(self):
        with pytest.raises(ValueError, match="monotone"):
            log_mapping_matrix(np.array([1.0, 2.0, 2.0, 3.0]), P)


class TestPipeline:
    tone = harmonic_tone(200.0, 0.64)

    def test_silence(self):
        out = compute_zcfp(Waveform(np.zeros(2000), SR))
        assert out.values.shape == (3, 25, 360)
        assert not out.values.any()

    def test_deterministic(self):
        a = compute_zcfp(self.tone, P.with_k(0.0)).values
        b = compute_zcfp(self.tone, P.with_k(0.0)).values
        assert a.tobytes() == b.tobytes()

    def test_k_zero_matches_plain(self):
        z = compute_zcfp(self.tone, P.with_k(0.0))
        c = compute_cfp(self.tone, P)
        assert z.values.tobytes() == c.values.tobytes()

    def test_channel_s_independent_of_k(self):
        a = compute_zcfp(self.tone, P.with_k(0.0)).values
        b = compute_zcfp(self.tone, P).values
        assert np.array_equal(a[0], b[0])
        assert not np.array_equal(a[1], b[1])

    def test_tail_harmonics_amplified(self):
        ratios = []
        for k in (0.0, 0.0006):
            row = modified_spectrum(self.tone, P.with_k(k))[30]
            ratios.append(band_energy(row, 2000) / band_energy(row, 200))
        assert ratios[1] > ratios[0]

    def test_gcos_argmax_stable(self):
        peaks = [
            np.argmax(compute_zcfp(self.tone, P.with_k(k)).values[2, 10:-10].mean(axis=0))
            for k in (0.0, 0.0006)
        ]
        assert abs(peaks[0] - peaks[1]) <= 1

    def test_rate_mismatch(self):
        with pytest.raises(ValueError, match="resample"):
            compute_zcfp(Waveform(np.zeros(100), 16000))

    def test_tensor_axes(self):
        out = compute_zcfp(self.tone)
        assert np.array_equal(out.log_bin_freqs, P.log_bin_freqs())
        assert out.frame_period == pytest.approx(0.01)

    @settings(max_examples=15, deadline=None)
    @given(arrays(np.float64, st.integers(1, 1600),
                  elements=st.floats(-1, 1, allow_nan=False, allow_infinity=False)))
    def test_finite_nonnegative(self, x):
        out = compute_zcfp(Waveform(x, SR)).values
        assert np.isfinite(out).all()
        assert (out >= 0).all()

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31), ks=st.lists(st.floats(0, 0.01), min_size=2, max_size=4))
    def test_modified_spectrum_monotone_in_k(self, seed, ks):
        x = np.random.default_rng(seed).uniform(-1, 1, 900)
        w = Waveform(x, SR)
        rows = [modified_spectrum(w, P.with_k(k)) for k in sorted(ks)]
        for lo, hi in zip(rows, rows[1:]):
            assert (hi >= lo).all()


class TestMirror:
    def test_even_symmetry(self, rng):
        full = mirror_spectrum(rng.random(W // 2 + 1))
        assert len(full) == W
        assert np.array_equal(full[1:], full[1:][::-1])


class TestTensorFile:
    def test_round_trip(self, tmp_path, rng):
        values = rng.random((3, 5, 360)).astype(np.float32).astype(np.float64)
        t = CfpTensor(values, P.log_bin_freqs(), np.arange(5) * 0.01)
        path = tmp_path / "x.zcfp"
        write_tensor(path, t, 0.01, chunk_frames=128, valid_frames=4)
        back, header = read_tensor(path)
        assert np.array_equal(back.values, values)
        assert np.array_equal(back.log_bin_freqs, P.log_bin_freqs())
        assert header == {"version": 1, "frame_period": 0.01, "chunk_frames": 128, "valid_frames": 4}

    def test_layout(self, tmp_path):
        t = CfpTensor(np.zeros((3, 2, 4)), np.arange(4.0), np.zeros(2))
        path = tmp_path / "x.zcfp"
        write_tensor(path, t, 0.01)
        data = path.read_bytes()
        assert data[:4] == b"ZCFP"
        assert len(data) == 4 + 4 * 4 + 8 + 4 + 4 + 4 * 8 + 3 * 2 * 4 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.zcfp"
        path.write_bytes(b"NOPE" + bytes(40))
        with pytest.raises(ValueError, match="magic"):
            read_tensor(path)

    def test_truncated(self, tmp_path):
        t = CfpTensor(np.zeros((3, 2, 4)), np.arange(4.0), np.zeros(2))
        path = tmp_path / "x.zcfp"
        write_tensor(path, t, 0.01)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ValueError, match="size"):
            read_tensor(path)

    def test_csv(self, tmp_path):
        t = CfpTensor(np.ones((3, 2, 4)), np.arange(4.0), np.array([0, 0.01]))
        path = tmp_path / "x.csv"
        write_tensor_csv(path, t)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 6
        assert lines[1].startswith("S,0,")


def test_frames_feed_stft():
    w = harmonic_tone(300.0, 0.2)
    frames = frame_signal(w, W, 80)
    assert stft_magnitude(frames).values.shape == (20, W // 2 + 1)
