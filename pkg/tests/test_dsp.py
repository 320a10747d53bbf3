"""DSP frontend: oracles, golden files, and pipeline invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_chirp, make_tone
from tajweed.audio import Waveform, read_wav
from tajweed.cache import read_mst
from tajweed.config import DspConfig
from tajweed.dsp import (
    SpectrogramTensor,
    filter_center_frequencies,
    hz_to_mel,
    log_normalize,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    normalize_peak,
    preprocess_clip,
    preprocess_waveform,
    resample,
    to_model_tensor,
)

CFG = DspConfig()


def naive_mel_spectrogram(w: Waveform, cfg: DspConfig) -> np.ndarray:
    """Straight-line reference: explicit frame loop, no vectorized tricks."""
    x = np.pad(w.samples.astype(np.float64), cfg.n_fft // 2)
    window = np.hanning(cfg.n_fft + 1)[:-1]
    n_frames = 1 + len(w.samples) // cfg.hop
    cols = []
    for i in range(n_frames):
        seg = x[i * cfg.hop : i * cfg.hop + cfg.n_fft]
        cols.append(np.abs(np.fft.rfft(seg * window)) ** cfg.spectrum_power)
    return mel_filterbank(cfg) @ np.stack(cols, axis=1)


class TestResample:
    def test_two_to_one_length(self):
        w = make_tone(440, 1.0, 22050)
        out = resample(w, 11025)
        assert out.sample_rate_hz == 11025
        assert abs(len(out.samples) - 11025) <= 1

    def test_identity_when_rate_matches(self):
        w = make_tone(440, 0.5, 11025)
        assert resample(w, 11025) is w

    def test_dominant_bin_preserved(self):
        # 440 Hz sine at 44100 Hz: after resampling the FFT peak stays at 440 Hz
        w = make_tone(440, 1.0, 44100)
        out = resample(w, 11025)
        spectrum = np.abs(np.fft.rfft(out.samples))
        freqs = np.fft.rfftfreq(len(out.samples), d=1.0 / 11025)
        bin_width = freqs[1] - freqs[0]
        assert abs(freqs[np.argmax(spectrum)] - 440.0) <= bin_width

    def test_empty_input_rejected(self):
        w = Waveform(samples=np.zeros(0), sample_rate_hz=22050)
        with pytest.raises(ValueError):
            resample(w, 11025)


class TestMelScale:
    def test_slaney_anchor_points(self):
        # linear region: mel = 3 f / 200; break at exactly 1 kHz -> 15 mel
        assert hz_to_mel(0.0) == pytest.approx(0.0)
        assert hz_to_mel(500.0) == pytest.approx(7.5)
        assert hz_to_mel(1000.0) == pytest.approx(15.0)
        # log region doubling: 6400 Hz lies 27 steps above the break
        step = math.log(6.4) / 27.0
        assert hz_to_mel(6400.0) == pytest.approx(15.0 + 27.0)
        assert hz_to_mel(2000.0) == pytest.approx(15.0 + math.log(2.0) / step)

    def test_inverse_round_trip(self):
        f = np.linspace(0.0, 4000.0, 513)
        assert np.allclose(mel_to_hz(hz_to_mel(f)), f, atol=1e-9)

    def test_monotone(self):
        f = np.linspace(0.0, 5000.0, 2001)
        assert np.all(np.diff(hz_to_mel(f)) > 0)


class TestFilterbank:
    def test_shape(self):
        fb = mel_filterbank(CFG)
        assert fb.shape == (CFG.n_mels, CFG.n_fft // 2 + 1)

    def test_nonnegative_and_banded(self):
        fb = mel_filterbank(CFG)
        freqs = np.fft.rfftfreq(CFG.n_fft, d=1.0 / CFG.target_rate_hz)
        assert np.all(fb >= 0)
        outside = freqs > CFG.f_max_hz
        assert np.all(fb[:, outside] == 0)
        assert np.all(fb.sum(axis=1) > 0), "every filter must catch at least one FFT bin"

    def test_unimodal(self):
        fb = mel_filterbank(CFG)
        for row in fb:
            nz = np.flatnonzero(row)
            seg = row[nz[0] : nz[-1] + 1]
            d = np.diff(seg)
            if len(d) == 0:
                continue
            falling = np.flatnonzero(d < 0)
            cut = falling[0] if len(falling) else len(d)
            assert np.all(d[:cut] >= 0) and np.all(d[cut:] <= 0)

    def test_centers_strictly_increasing_within_band(self):
        centers = filter_center_frequencies(CFG)
        assert len(centers) == CFG.n_mels
        assert np.all(np.diff(centers) > 0)
        assert centers[0] > CFG.f_min_hz and centers[-1] < CFG.f_max_hz


class TestMelSpectrogram:
    def test_frame_count_one_second(self):
        # floor(11025 / 256) + 1 = 44
        m = mel_spectrogram(make_tone(500, 1.0, 11025), CFG)
        assert m.shape == (224, 44)

    def test_matches_naive_oracle(self):
        w = make_chirp(300, 2500, 0.5, 11025)
        fast = mel_spectrogram(w, CFG)
        slow = naive_mel_spectrogram(w, CFG)
        assert fast.shape == slow.shape
        assert np.max(np.abs(fast - slow)) < 1e-10 * max(1.0, slow.max())

    def test_zero_waveform_gives_zero_matrix(self):
        w = Waveform(samples=np.zeros(4096), sample_rate_hz=11025)
        assert np.all(mel_spectrogram(w, CFG) == 0)

    def test_nonnegative(self):
        m = mel_spectrogram(make_chirp(200, 3000, 0.3, 11025), CFG)
        assert np.all(m >= 0)

    def test_sine_peak_at_expected_mel_bin(self):
        w = make_tone(1000, 1.0, 11025)
        m = mel_spectrogram(w, CFG)
        centers = filter_center_frequencies(CFG)
        expected_bin = int(np.argmin(np.abs(centers - 1000.0)))
        interior = m[:, 2:-2]
        peaks = np.argmax(interior, axis=0)
        assert np.all(peaks == peaks[0]), "peak bin must be constant over interior frames"
        assert peaks[0] == expected_bin

    def test_wrong_rate_rejected(self):
        with pytest.raises(ValueError, match="resample"):
            mel_spectrogram(make_tone(440, 0.5, 22050), CFG)

    def test_too_short_rejected(self):
        w = Waveform(samples=np.zeros(CFG.hop - 1), sample_rate_hz=11025)
        with pytest.raises(ValueError, match="hop"):
            mel_spectrogram(w, CFG)


class TestLogNormalize:
    def test_constant_matrix_gives_zeros(self):
        assert np.all(log_normalize(np.full((4, 5), 3.7)) == 0)

    def test_standardization_identity(self):
        rng = np.random.default_rng(11)
        m = rng.random((50, 60)) * 10
        out = log_normalize(m)
        assert abs(out.mean()) < 1e-6
        assert abs(out.std() - 1.0) < 1e-6

    def test_hand_two_by_two(self):
        # log(m + 1e-6) maps {0, e - 1e-6} to {log 1e-6, 1}; standardizing a
        # two-valued matrix with equal counts lands exactly on {-1, +1}
        m = np.array([[0.0, 0.0], [math.e - 1e-6, math.e - 1e-6]])
        out = log_normalize(m)
        assert np.allclose(out, [[-1.0, -1.0], [1.0, 1.0]], atol=1e-12)

    def test_negative_entries_rejected(self):
        with pytest.raises(ValueError):
            log_normalize(np.array([[0.1, -0.2]]))


class TestToModelTensor:
    def _standardized(self, rng, t):
        return log_normalize(rng.random((224, t)) + 0.01)

    def test_square_input_passes_through(self):
        rng = np.random.default_rng(0)
        m = self._standardized(rng, 224)
        out = to_model_tensor(m, CFG)
        assert np.allclose(out.data[:, :, 0], m, atol=1e-6)

    def test_duplicated_pairs_recover_original(self):
        # 448 columns made of duplicated pairs: half-pixel bilinear centers
        # land exactly between each pair, recovering the 224-column original
        rng = np.random.default_rng(1)
        m = self._standardized(rng, 224)
        doubled = np.repeat(m, 2, axis=1)
        out_doubled = to_model_tensor(doubled, CFG)
        out_orig = to_model_tensor(m, CFG)
        assert np.array_equal(out_doubled.data, out_orig.data)

    def test_output_shape_and_tiling(self):
        rng = np.random.default_rng(2)
        out = to_model_tensor(self._standardized(rng, 44), CFG)
        assert out.data.shape == (224, 224, 3)
        assert out.data.dtype == np.float32
        assert np.array_equal(out.data[:, :, 0], out.data[:, :, 1])
        assert np.array_equal(out.data[:, :, 0], out.data[:, :, 2])

    def test_moments_restored_after_resize(self):
        rng = np.random.default_rng(3)
        out = to_model_tensor(self._standardized(rng, 37), CFG)
        plane = out.data[:, :, 0].astype(np.float64)
        assert abs(plane.mean()) < 1e-4
        assert abs(plane.std() - 1.0) < 1e-3

    def test_wrong_row_count_rejected(self):
        with pytest.raises(ValueError, match="224"):
            to_model_tensor(np.zeros((100, 44)), CFG)

    def test_tensor_type_rejects_nonfinite(self):
        bad = np.full((224, 224, 3), np.nan, dtype=np.float32)
        with pytest.raises(ValueError):
            SpectrogramTensor(data=bad, provenance="x")


class TestGoldenFiles:
    """Committed WAVs must reproduce the frozen tensors; see make_goldens.py."""

    @pytest.mark.parametrize(
        "stem",
        ["silence_1s_11025hz", "sine_1khz_1s_44100hz", "chirp_200_3000_2s_22050hz"],
    )
    def test_golden(self, stem, fixtures_dir, golden_dir):
        w = read_wav(fixtures_dir / f"{stem}.wav")
        got = preprocess_waveform(w, CFG, provenance=stem).data
        want = read_mst(golden_dir / f"{stem}.mst")
        assert got.shape == (224, 224, 3)
        assert np.max(np.abs(got - want)) < 1e-5

    def test_determinism(self, fixtures_dir):
        w = read_wav(fixtures_dir / "sine_1khz_1s_44100hz.wav")
        a = preprocess_waveform(w, CFG).data
        b = preprocess_waveform(w, CFG).data
        assert np.array_equal(a, b)


class TestGainInvariance:
    @pytest.mark.parametrize("c", [0.1, 3.0])
    def test_scaled_waveform_same_tensor(self, c):
        base = make_chirp(200, 3000, 0.6, 11025)
        scaled = Waveform(samples=base.samples * c, sample_rate_hz=11025)
        t0 = preprocess_waveform(base, CFG).data
        t1 = preprocess_waveform(scaled, CFG).data
        assert np.max(np.abs(t1 - t0)) < 1e-5

    def test_peak_normalization_keeps_silence_silent(self):
        w = Waveform(samples=np.zeros(1024), sample_rate_hz=11025)
        assert np.all(normalize_peak(w).samples == 0)


class TestPreprocessClip:
    def test_error_carries_clip_id(self, tmp_path):
        from tajweed.ingest import ClipRecord, RuleLabels

        bad = tmp_path / "broken.wav"
        bad.write_bytes(b"this is not audio")
        rec = ClipRecord(
            clip_id="S9_1",
            speaker_id="S9",
            audio_path=bad,
            labels=RuleLabels(1, 1, 1),
        )
        with pytest.raises(ValueError, match="clip S9_1"):
            preprocess_clip(rec, CFG)


@settings(max_examples=20, deadline=None)
@given(
    n_samples=st.integers(min_value=CFG.hop, max_value=8000),
    freq=st.floats(min_value=50, max_value=4000),
    amp=st.floats(min_value=1e-4, max_value=4.0),
)
def test_any_waveform_yields_contract_tensor(n_samples, freq, amp):
    t = np.arange(n_samples) / 11025
    w = Waveform(samples=amp * np.sin(2 * math.pi * freq * t), sample_rate_hz=11025)
    out = preprocess_waveform(w, CFG)
    plane = out.data[:, :, 0].astype(np.float64)
    assert out.data.shape == (224, 224, 3)
    assert np.all(np.isfinite(out.data))
    assert np.array_equal(out.data[:, :, 0], out.data[:, :, 2])
    # standardized, unless the clip is pure silence (all-zero tensor)
    if np.any(plane != 0):
        assert abs(plane.mean()) < 1e-4
        assert abs(plane.std() - 1.0) < 1e-3
