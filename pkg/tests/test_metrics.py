#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
vcforge - Voice Conversion Toolkit
File: tests/test_metrics.py
Created: 2026-09-14 11:48:03 UTC

Description:
    LSD ratio, F0 RMSE, per-utterance scoring and report files.
'''

import csv
import math

import numpy as np
import pytest

from vcforge import metrics
from vcforge.domain.domain import FeatureTrack, PhoneSegment, PhoneSegmentList, UtteranceScore
from vcforge.exceptions import InputValidationError, UndefinedMetricError

def _spectra(rows) -> FeatureTrack:
    data = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return FeatureTrack(data, 0.005, ("logsp",) * data.shape[1])

def _score(utt_id: str, lsd: float, rmse=None) -> UtteranceScore:
    return UtteranceScore(utt_id, lsd, None, rmse, None if rmse is None else 0.1, n_bins=2, n_frames=10)

class TestLsd:
    def test_hand_computed_case(self):
        assert metrics.lsd_ratio([[0.0, 0.0]], [[0.5, 0.5]], [[1.0, 1.0]]) == pytest.approx(25.0)

    def test_target_as_converted_is_zero(self):
        rng = np.random.default_rng(0)
        source, target = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
        assert metrics.lsd_ratio(source, target, target) == 0.0

    def test_source_as_converted_is_one_hundred(self):
        rng = np.random.default_rng(1)
        source, target = rng.standard_normal((8, 4)), rng.standard_normal((8, 4))
        assert metrics.lsd_ratio(source, source, target) == pytest.approx(100.0)

    def test_linear_domain_is_logged(self):
        ratio = metrics.lsd_ratio([[1.0, 1.0]], [[math.exp(0.5)] * 2], [[math.e, math.e]], domain="linear")
        assert ratio == pytest.approx(25.0)

    def test_linear_domain_rejects_zeros(self):
        with pytest.raises(InputValidationError):
            metrics.lsd_ratio([[0.0]], [[1.0]], [[1.0]], domain="linear")

    def test_identical_source_and_target(self):
        with pytest.raises(UndefinedMetricError):
            metrics.lsd_ratio([[1.0, 2.0]], [[0.0, 0.0]], [[1.0, 2.0]])

    def test_zero_distance_frames_are_skipped(self):
        source = [[0.0, 0.0], [3.0, 3.0]]
        converted = [[9.0, 9.0], [0.5, 0.5]]
        target = [[0.0, 0.0], [1.0, 1.0]]
        assert metrics.lsd_ratio(source, converted, target) == pytest.approx(100.0 * 0.5 / 8.0)

    def test_shape_mismatch(self):
        with pytest.raises(InputValidationError, match="shapes"):
            metrics.lsd_ratio(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((3, 3)))

    def test_unknown_domain(self):
        with pytest.raises(InputValidationError, match="domain"):
            metrics.lsd_ratio([[1.0]], [[1.0]], [[2.0]], domain="mel")

    def test_vuv_column_is_ignored(self):
        source = FeatureTrack(np.array([[0.0, 0.0, 1.0]]), 0.005, ("logsp", "logsp", "vuv"))
        converted = FeatureTrack(np.array([[0.5, 0.5, 0.0]]), 0.005, ("logsp", "logsp", "vuv"))
        target = FeatureTrack(np.array([[1.0, 1.0, 0.0]]), 0.005, ("logsp", "logsp", "vuv"))
        assert metrics.lsd_ratio(source, converted, target) == pytest.approx(25.0)

class TestLsdOverPaths:
    def test_shared_path_equals_plain_ratio(self):
        rng = np.random.default_rng(2)
        source, converted, target = (_spectra(rng.standard_normal((5, 3))) for _ in range(3))
        path = [(0, 0), (1, 1), (2, 1), (3, 2), (4, 4)]
        expected = metrics.lsd_ratio(source.data[[0, 1, 2, 3, 4]], converted.data[[0, 1, 2, 3, 4]],
                                     target.data[[0, 1, 1, 2, 4]])
        assert metrics.lsd_ratio_over_paths(source, converted, target, path, path) == pytest.approx(expected)

    def test_separate_paths_average_each_side(self):
        source = _spectra([[0.0], [0.0]])
        converted = _spectra([[1.5], [1.5], [1.5]])
        target = _spectra([[2.0], [2.0]])
        ratio = metrics.lsd_ratio_over_paths(source, converted, target, [(0, 0), (1, 1)], [(0, 0), (1, 0), (2, 1)])
        assert ratio == pytest.approx(100.0 * 0.25 / 4.0)

    def test_mask_removes_frames(self):
        source, converted, target = _spectra([[0.0], [5.0]]), _spectra([[1.0], [5.0]]), _spectra([[2.0], [0.0]])
        path = [(0, 0), (1, 1)]
        mask = np.array([True, False])
        ratio = metrics.lsd_ratio_over_paths(source, converted, target, path, path, mask, mask)
        assert ratio == pytest.approx(25.0)

    def test_everything_masked(self):
        track = _spectra([[0.0]])
        mask = np.array([False])
        with pytest.raises(UndefinedMetricError):
            metrics.lsd_ratio_over_paths(track, track, _spectra([[1.0]]), [(0, 0)], [(0, 0)], mask, mask)

class TestF0Rmse:
    def test_hand_computed_case(self):
        converted = np.array([[100.0, 1.0], [200.0, 1.0]])
        target = np.array([[104.0, 1.0], [197.0, 1.0]])
        assert metrics.f0_rmse(converted, target) == pytest.approx(math.sqrt(12.5), abs=1e-12)

    def test_only_frames_voiced_in_both(self):
        converted = np.array([[100.0, 1.0], [150.0, 1.0], [0.0, 0.0], [210.0, 1.0]])
        target = np.array([[110.0, 1.0], [0.0, 0.0], [300.0, 1.0], [200.0, 1.0]])
        comparison = metrics.f0_comparison(converted, target)
        assert comparison.rmse_hz == pytest.approx(10.0)
        assert comparison.n_voiced_both == 2
        assert comparison.n_mismatch == 2
        assert comparison.mismatch_rate == pytest.approx(0.5)

    def test_no_common_voicing(self):
        with pytest.raises(UndefinedMetricError):
            metrics.f0_rmse(np.array([[100.0, 1.0]]), np.array([[0.0, 0.0]]))

    def test_length_mismatch(self):
        with pytest.raises(InputValidationError):
            metrics.f0_rmse(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_needs_two_columns(self):
        with pytest.raises(InputValidationError, match="columns"):
            metrics.f0_rmse(np.zeros((2, 3)), np.zeros((2, 3)))

class TestScoring:
    def test_speech_mask_skips_silence(self):
        phones = PhoneSegmentList((PhoneSegment("sil", 0, 2), PhoneSegment("a", 2, 4), PhoneSegment("pau", 4, 5)))
        np.testing.assert_array_equal(metrics.speech_mask(phones, 6), [False, False, True, True, False, False])

    def test_score_utterance(self):
        source = _spectra([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        converted = _spectra([[0.5, 0.5], [0.5, 0.5], [0.5, 0.5]])
        target = _spectra([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
        path = [(0, 0), (1, 1), (2, 2)]
        f0 = FeatureTrack(np.array([[100.0, 1.0], [110.0, 1.0], [0.0, 0.0]]), 0.005, ("f0", "vuv"))
        target_f0 = FeatureTrack(np.array([[103.0, 1.0], [106.0, 1.0], [120.0, 1.0]]), 0.005, ("f0", "vuv"))
        phones = PhoneSegmentList((PhoneSegment("sil", 0, 1), PhoneSegment("a", 1, 3)))
        score = metrics.score_utterance("u1", source, converted, target, path, path, f0, target_f0, phones, phones)
        assert score.lsd_percent == pytest.approx(25.0)
        assert score.lsd_speech_percent == pytest.approx(25.0)
        assert score.f0_rmse_hz == pytest.approx(math.sqrt(12.5))
        assert score.voicing_mismatch_rate == pytest.approx(1 / 3)
        assert (score.n_bins, score.n_frames) == (2, 3)

    def test_undefined_f0_is_left_out(self):
        track = _spectra([[0.0]])
        silent = FeatureTrack(np.zeros((1, 2)), 0.005, ("f0", "vuv"))
        score = metrics.score_utterance("u", track, track, _spectra([[1.0]]), [(0, 0)], [(0, 0)], silent, silent)
        assert score.f0_rmse_hz is None
        assert score.lsd_speech_percent is None

class TestReports:
    def _report(self):
        return metrics.aggregate("DNN-SP", [_score("a", 40.0, 10.0), _score("b", 60.0)], excluded=["c"])

    def test_aggregate_means_over_defined_scores(self):
        report = self._report()
        assert report.lsd_percent == pytest.approx(50.0)
        assert report.f0_rmse_hz == pytest.approx(10.0)
        assert report.lsd_speech_percent is None
        assert report.excluded == ("c",)

    def test_aggregate_needs_scores(self):
        with pytest.raises(UndefinedMetricError):
            metrics.aggregate("GMM", [])

    def test_key_value_report(self, tmp_path):
        metrics.write_report_kv(self._report(), tmp_path / "report.kv")
        values = metrics.read_report_kv(tmp_path / "report.kv")
        assert values["system"] == "DNN-SP"
        assert values["n_utterances"] == "2"
        assert float(values["lsd_percent"]) == 50.0
        assert values["lsd_speech_percent"] == "none"
        assert values["excluded"] == "c"
        assert float(values["utt.a.f0_rmse_hz"]) == 10.0
        assert values["utt.b.f0_rmse_hz"] == "none"

    def test_csv_report(self, tmp_path):
        metrics.write_report_csv(self._report(), tmp_path / "report.csv")
        with open(tmp_path / "report.csv", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [row["utt_id"] for row in rows] == ["a", "b"]
        assert float(rows[0]["lsd_percent"]) == 40.0

    def test_text_report(self, tmp_path):
        metrics.write_report_text(self._report(), tmp_path / "report.txt")
        text = (tmp_path / "report.txt").read_text(encoding="utf-8")
        assert "DNN-SP" in text
        assert "50.00" in text
        assert "Excluded" in text
