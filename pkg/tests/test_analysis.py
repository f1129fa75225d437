#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
vcforge - Voice Conversion Toolkit
File: tests/test_analysis.py
Created: 2026-09-12 11:05:48 UTC

Description:
    Spectral envelope, F0, intensity, dynamic features and resynthesis.
'''

import numpy as np
import pytest

from config import AnalysisConfig
from vcforge import analysis
from vcforge.domain.domain import Audio, FeatureTrack
from vcforge.exceptions import InputValidationError

from conftest import sawtooth

class TestFraming:
    def test_frame_count_is_centered(self, analysis_config):
        assert analysis.frame_count(16000, analysis_config) == 1 + 16000 // 80

    def test_tracks_share_frame_count(self, sawtooth_200hz, analysis_config):
        result = analysis.analyze(sawtooth_200hz, analysis_config)
        n = analysis.frame_count(len(sawtooth_200hz.samples), analysis_config)
        assert result.envelope.n_frames == result.f0vuv.n_frames == result.intensity.n_frames == n
        assert result.envelope.dim == analysis_config.envelope_order == 512

    def test_sample_rate_mismatch(self, analysis_config):
        with pytest.raises(InputValidationError, match="sample rate"):
            analysis.extract_envelope(Audio(np.zeros(4000), 8000), analysis_config)

    def test_shorter_than_window(self, analysis_config):
        with pytest.raises(InputValidationError, match="shorter"):
            analysis.analyze(Audio(np.zeros(100), 16000), analysis_config)

class TestEnvelope:
    def test_silence_sits_on_the_floor(self, analysis_config):
        envelope = analysis.extract_envelope(Audio(np.zeros(4000), 16000), analysis_config)
        np.testing.assert_allclose(envelope.data, analysis_config.log_floor, atol=1e-9)

    def test_never_below_floor(self, sawtooth_200hz, analysis_config):
        envelope = analysis.extract_envelope(sawtooth_200hz, analysis_config)
        assert envelope.data.min() >= analysis_config.log_floor
        assert envelope.dim_labels == ("logsp",) * 512

    def test_sawtooth_tilt(self, sawtooth_200hz, analysis_config):
        frame = analysis.extract_envelope(sawtooth_200hz, analysis_config).data[20]
        bin_hz = analysis_config.sample_rate / analysis_config.fft_size
        low = frame[int(400 / bin_hz)]
        high = frame[int(7000 / bin_hz)]
        assert low > high + 1.5

class TestF0:
    def test_sawtooth_200hz(self, sawtooth_200hz, analysis_config):
        f0vuv = analysis.extract_f0(sawtooth_200hz, analysis_config).data
        inner = f0vuv[10:-10]
        assert inner[:, 1].mean() >= 0.9
        close = np.abs(inner[:, 0] - 200.0) <= 3.0
        assert close.mean() >= 0.9

    def test_noise_is_mostly_unvoiced(self, analysis_config):
        rng = np.random.default_rng(0)
        f0vuv = analysis.extract_f0(Audio(0.3 * rng.standard_normal(8000), 16000), analysis_config).data
        assert f0vuv[:, 1].mean() < 0.2

    def test_unvoiced_frames_have_zero_f0(self, analysis_config):
        f0vuv = analysis.extract_f0(Audio(np.zeros(4000), 16000), analysis_config).data
        assert np.all(f0vuv == 0.0)

    def test_voiced_values_within_search_range(self, analysis_config):
        audio = sawtooth(95.0, 0.4, 16000)
        f0vuv = analysis.extract_f0(audio, analysis_config).data
        voiced = f0vuv[f0vuv[:, 1] > 0, 0]
        assert np.all((voiced >= analysis_config.f0_floor_hz) & (voiced <= analysis_config.f0_ceil_hz))

    def test_floor_needs_lags_inside_frame(self):
        config = AnalysisConfig(fft_size=256, f0_floor_hz=50.0)
        with pytest.raises(InputValidationError, match="lags"):
            analysis.extract_f0(Audio(np.zeros(1024), 16000), config)

class TestIntensity:
    def test_sine_log_rms(self, analysis_config):
        t = np.arange(16000) / 16000
        audio = Audio(0.5 * np.sin(2 * np.pi * 440 * t), 16000)
        intensity = analysis.extract_intensity(audio, analysis_config).data[:, 0]
        np.testing.assert_allclose(intensity[20:-20], np.log(0.5 / np.sqrt(2)), atol=0.01)

    def test_silence_is_floor(self, analysis_config):
        intensity = analysis.extract_intensity(Audio(np.zeros(2048), 16000), analysis_config).data
        assert np.all(intensity == analysis_config.log_floor)

    def test_envelope_log_rms_matches_intensity(self, analysis_config):
        rng = np.random.default_rng(2)
        audio = Audio(0.2 * rng.standard_normal(8000), 16000)
        frames = analysis.frame_signal(audio.samples, analysis_config) * analysis.analysis_window(analysis_config)
        spectrum = np.log(np.abs(np.fft.rfft(frames, axis=1)))[:, :analysis_config.envelope_order]
        implied = analysis.envelope_log_rms(spectrum, analysis_config)
        measured = analysis.extract_intensity(audio, analysis_config).data[:, 0]
        # Nyquist bin is the only part not represented in the envelope
        np.testing.assert_allclose(implied[10:-10], measured[10:-10], atol=0.02)

    def test_envelope_shift_shifts_log_rms(self, analysis_config):
        rows = np.random.default_rng(4).normal(-4, 1, size=(3, analysis_config.envelope_order))
        base = analysis.envelope_log_rms(rows, analysis_config)
        np.testing.assert_allclose(analysis.envelope_log_rms(rows + 0.7, analysis_config), base + 0.7)

class TestDynamics:
    def test_ramp_deltas(self):
        track = FeatureTrack(np.arange(5.0) * 2.0, 0.005, ("logsp",))
        dyn = analysis.append_deltas(track)
        assert dyn.dim_labels == ("logsp", "delta", "deltadelta")
        np.testing.assert_allclose(dyn.data[1:-1, 1], 2.0)
        np.testing.assert_allclose(dyn.data[1:-1, 2], 0.0)
        # edges are replicated
        assert dyn.data[0, 1] == pytest.approx(1.0)
        assert dyn.data[-1, 1] == pytest.approx(1.0)

    def test_static_columns_survive(self):
        track = FeatureTrack(np.ones((4, 3)), 0.005, ("logsp",) * 3)
        assert analysis.append_deltas(track).static_columns() == [0, 1, 2]

class TestCepstrum:
    def test_full_order_is_lossless(self):
        rows = np.random.default_rng(1).standard_normal((6, 32))
        track = FeatureTrack(rows, 0.005, ("logsp",) * 32)
        back = analysis.cepstrum_to_envelope(analysis.envelope_to_cepstrum(track, 32), 32)
        np.testing.assert_allclose(back.data, rows, atol=1e-12)

    def test_truncation_smooths(self):
        bins = np.arange(64)
        rows = np.vstack([np.cos(2 * np.pi * bins / 64) + 0.3 * np.cos(np.pi * bins * 0.9)])
        track = FeatureTrack(rows, 0.005, ("logsp",) * 64)
        smooth = analysis.cepstrum_to_envelope(analysis.envelope_to_cepstrum(track, 8), 64).data
        assert np.std(np.diff(smooth[0])) < np.std(np.diff(rows[0]))

    def test_too_many_coefficients(self):
        with pytest.raises(InputValidationError):
            analysis.envelope_to_cepstrum(FeatureTrack(np.zeros((2, 8)), 0.005), 9)

class TestResolution:
    def test_downsample_averages_pairs(self):
        track = FeatureTrack(np.arange(8.0).reshape(1, 8), 0.005, ("logsp",) * 8)
        np.testing.assert_allclose(analysis.downsample_envelope(track).data, [[0.5, 2.5, 4.5, 6.5]])

    def test_upsample_restores_linear_envelopes(self):
        rows = np.linspace(-3.0, 1.0, 16)[None, :]
        track = FeatureTrack(rows, 0.005, ("logsp",) * 16)
        restored = analysis.upsample_envelope(analysis.downsample_envelope(track), 16)
        np.testing.assert_allclose(restored.data, rows, atol=1e-12)

class TestSynthesis:
    def test_length_and_peak(self, small_analysis):
        n_frames = 40
        envelope = FeatureTrack(np.full((n_frames, 128), -3.0), 0.005, ("logsp",) * 128)
        f0vuv = FeatureTrack(np.column_stack([np.full(n_frames, 120.0), np.ones(n_frames)]), 0.005, ("f0", "vuv"))
        audio = analysis.synthesize(envelope, f0vuv, small_analysis)
        assert len(audio.samples) == (n_frames - 1) * small_analysis.hop_samples + 1
        assert np.max(np.abs(audio.samples)) <= 1.0
        assert analysis.frame_count(len(audio.samples), small_analysis) == n_frames

    def test_resynthesized_pitch_is_recovered(self, small_analysis):
        n_frames = 100
        envelope = FeatureTrack(np.full((n_frames, 128), -4.0), 0.005, ("logsp",) * 128)
        f0vuv = FeatureTrack(np.column_stack([np.full(n_frames, 125.0), np.ones(n_frames)]), 0.005, ("f0", "vuv"))
        audio = analysis.synthesize(envelope, f0vuv, small_analysis)
        measured = analysis.extract_f0(audio, small_analysis).data[10:-10]
        assert measured[:, 1].mean() > 0.9
        assert np.median(measured[measured[:, 1] > 0, 0]) == pytest.approx(125.0, abs=2.0)

    def test_envelope_order_mismatch(self, small_analysis):
        envelope = FeatureTrack(np.zeros((5, 64)), 0.005)
        f0vuv = FeatureTrack(np.zeros((5, 2)), 0.005)
        with pytest.raises(InputValidationError, match="bins"):
            analysis.synthesize(envelope, f0vuv, small_analysis)

    def test_same_seed_same_noise(self, small_analysis):
        envelope = FeatureTrack(np.full((20, 128), -3.0), 0.005, ("logsp",) * 128)
        f0vuv = FeatureTrack(np.zeros((20, 2)), 0.005, ("f0", "vuv"))
        a = analysis.synthesize(envelope, f0vuv, small_analysis, seed=7)
        b = analysis.synthesize(envelope, f0vuv, small_analysis, seed=7)
        np.testing.assert_array_equal(a.samples, b.samples)
