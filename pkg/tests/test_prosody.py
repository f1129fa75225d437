#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
vcforge - Voice Conversion Toolkit
File: tests/test_prosody.py
Created: 2026-09-14 08:37:19 UTC

Description:
    Voiced segments, F0 difference features, mean-variance mapping,
    duration sampling and retiming, and intensity application.
'''

import numpy as np
import pytest

from vcforge import analysis, featio, pipeline, prosody
from vcforge.domain.domain import F0DiffFeature, FeatureTrack, MeanVarStats, PhoneSegment, PhoneSegmentList, UtterancePair, VoicedSegment
from vcforge.exceptions import InputValidationError, TrainingError

def _f0_track(f0, vuv=None) -> FeatureTrack:
    f0 = np.asarray(f0, dtype=np.float64)
    vuv = (f0 > 0).astype(np.float64) if vuv is None else np.asarray(vuv, dtype=np.float64)
    return FeatureTrack(np.column_stack([f0, vuv]), 0.005, ("f0", "vuv"))

def _segment(start: int, end: int) -> VoicedSegment:
    values = np.full(end - start, 100.0)
    return VoicedSegment(start, end, values, values, 100.0)

def _phones(*spans) -> PhoneSegmentList:
    return PhoneSegmentList(tuple(PhoneSegment(label, s, e) for label, s, e in spans))

class TestVoicedSegments:
    def test_runs_drop_single_frames(self):
        assert prosody.voiced_runs(np.array([0, 1, 1, 0, 1, 0, 1, 1, 1])) == [(1, 3), (6, 9)]

    def test_single_frames_kept_on_request(self):
        assert prosody.voiced_runs(np.array([1, 0, 1, 1]), min_length=1) == [(0, 1), (2, 4)]

    def test_segments_are_resampled(self):
        track = _f0_track([0, 100, 110, 120, 0, 0, 200, 220, 0])
        segments = prosody.extract_voiced_segments(track, 5)
        assert [(s.start_frame, s.end_frame) for s in segments] == [(1, 4), (6, 8)]
        np.testing.assert_allclose(segments[0].normalized, [100, 105, 110, 115, 120])
        assert segments[1].mean == pytest.approx(210.0)

    def test_log_domain(self):
        segment = prosody.extract_voiced_segments(_f0_track([100.0, 200.0]), 3, log_domain=True)[0]
        np.testing.assert_allclose(segment.original_values, np.log([100.0, 200.0]))

    def test_segment_length_too_short(self):
        with pytest.raises(InputValidationError):
            prosody.extract_voiced_segments(_f0_track([100.0, 110.0]), 1)

    def test_intensity_reuses_f0_voicing(self):
        intensity = FeatureTrack(np.array([[-3.0], [-2.0], [-1.0]]), 0.005, ("intensity",))
        segments = prosody.extract_intensity_segments(intensity, _f0_track([0, 120, 130]), 4)
        assert [(s.start_frame, s.end_frame) for s in segments] == [(1, 3)]
        assert segments[0].mean == pytest.approx(-1.5)

class TestDifferenceFeatures:
    def test_leading_zero_and_differences(self):
        segment = prosody.extract_voiced_segments(_f0_track([100.0, 104.0, 103.0]), 3)[0]
        np.testing.assert_allclose(prosody.f0_to_diff(segment).values, [0.0, 4.0, -1.0])

    def test_first_element_must_be_zero(self):
        with pytest.raises(InputValidationError):
            F0DiffFeature(np.array([1.0, 2.0]))

    def test_reconstructs_normalized_curve(self):
        rng = np.random.default_rng(0)
        values = 120.0 + np.cumsum(rng.normal(0, 3, 17))
        segment = prosody.extract_voiced_segments(_f0_track(values), 55)[0]
        rebuilt = prosody.reconstruct_segment(prosody.f0_to_diff(segment), float(segment.normalized.mean()))
        np.testing.assert_allclose(rebuilt, segment.normalized, atol=1e-9)

    def test_ramp_round_trip_to_original_length(self):
        ramp = np.linspace(100.0, 150.0, 11)
        segment = prosody.extract_voiced_segments(_f0_track(ramp), 55)[0]
        rebuilt = prosody.reconstruct_f0(prosody.f0_to_diff(segment), segment.mean, segment.length)
        np.testing.assert_allclose(rebuilt, ramp, atol=1e-9)

    def test_every_corpus_segment_round_trips_at_its_own_length(self, make_experiment):
        config = make_experiment()
        assert pipeline.cmd_extract(config).exit_code == 0
        tracks = sorted((config.workdir / "features").glob("*.f0.vcft"))
        assert tracks
        n_segments = 0
        for path in tracks:
            track = featio.read_track(path)
            for start, end in prosody.voiced_runs(track.data[:, 1]):
                segment = next(s for s in prosody.extract_voiced_segments(track, end - start) if s.start_frame == start)
                np.testing.assert_array_equal(segment.normalized, segment.original_values)
                rebuilt = prosody.reconstruct_f0(prosody.f0_to_diff(segment), segment.mean, segment.length)
                np.testing.assert_allclose(rebuilt, segment.original_values, rtol=0, atol=1e-9, err_msg=path.name)
                n_segments += 1
        assert n_segments > 0

    def test_reconstruction_has_requested_mean(self):
        diff = F0DiffFeature(np.array([0.0, 5.0, -2.0, 1.0]))
        assert prosody.reconstruct_segment(diff, 180.0).mean() == pytest.approx(180.0)

class TestMeanVar:
    def test_hand_computed_value(self):
        stats = MeanVarStats(120.0, 20.0, 220.0, 40.0)
        assert prosody.meanvar_transform(140.0, stats) == pytest.approx(260.0, abs=1e-12)

    def test_unvoiced_stays_zero(self):
        stats = MeanVarStats(120.0, 20.0, 220.0, 40.0)
        np.testing.assert_allclose(prosody.meanvar_transform(np.array([0.0, 120.0, 100.0]), stats),
                                   [0.0, 220.0, 180.0])

    def test_fitted_map_matches_target_moments(self):
        rng = np.random.default_rng(1)
        source = [_f0_track(np.where(rng.random(80) < 0.7, rng.normal(120, 15, 80), 0.0)) for _ in range(3)]
        target = [_f0_track(np.where(rng.random(80) < 0.7, rng.normal(230, 30, 80), 0.0)) for _ in range(3)]
        stats = prosody.fit_meanvar(source, target)
        voiced = np.concatenate([t.data[t.data[:, 1] > 0, 0] for t in source])
        mapped = prosody.meanvar_transform(voiced, stats)
        assert mapped.mean() == pytest.approx(stats.target_mean, rel=0.01)
        assert mapped.std() == pytest.approx(stats.target_std, rel=0.01)

    def test_no_voiced_frames(self):
        with pytest.raises(TrainingError, match="no voiced source"):
            prosody.fit_meanvar([_f0_track([0.0, 0.0])], [_f0_track([100.0, 120.0])])

    def test_constant_f0(self):
        with pytest.raises(TrainingError, match="zero variance"):
            prosody.fit_meanvar([_f0_track([100.0, 100.0])], [_f0_track([100.0, 120.0])])

    def test_segment_mean_must_be_positive(self):
        with pytest.raises(InputValidationError):
            prosody.predict_segment_mean(0.0, MeanVarStats(1.0, 1.0, 1.0, 1.0))

    def test_segment_mean_from_frames(self):
        predictions = np.array([100.0, 110.0, 120.0, 130.0])
        assert prosody.predict_segment_mean_from_frames(predictions, 1, 3) == pytest.approx(115.0)
        with pytest.raises(InputValidationError):
            prosody.predict_segment_mean_from_frames(predictions, 2, 5)

class TestSegmentPairing:
    def test_majority_owner_wins(self):
        alignment = [(i, i) for i in range(10)]
        matches = prosody.pair_segments([_segment(0, 4), _segment(6, 10)], [_segment(1, 5), _segment(7, 9)],
                                        alignment, 10)
        assert matches == [(0, 0), (1, 1)]

    def test_unmatched_source_segment_is_dropped(self):
        alignment = [(i, i) for i in range(10)]
        assert prosody.pair_segments([_segment(0, 3), _segment(6, 9)], [_segment(6, 9)], alignment, 10) == [(1, 0)]

    def test_training_set_on_identical_speakers(self):
        track = _f0_track([0, 100, 105, 112, 0, 0, 150, 140, 135, 0])
        pair = UtterancePair(track, track, alignment=tuple((i, i) for i in range(10)), utt_id="u")
        inputs, targets = prosody.build_f0_training_set([pair], 6)
        assert inputs.shape == (2, 6)
        np.testing.assert_array_equal(inputs, targets)
        assert np.all(inputs[:, 0] == 0.0)

    def test_training_set_needs_alignment(self):
        track = _f0_track([100.0, 110.0])
        with pytest.raises(InputValidationError, match="aligned"):
            prosody.build_f0_training_set([UtterancePair(track, track, utt_id="u")], 4)

    def test_training_set_without_matches(self):
        voiced, silent = _f0_track([100.0, 110.0, 120.0]), _f0_track([0.0, 0.0, 0.0])
        pair = UtterancePair(voiced, silent, alignment=((0, 0), (1, 1), (2, 2)))
        with pytest.raises(TrainingError):
            prosody.build_intensity_training_set([pair], 4)

class TestFrameF0:
    def test_window_features_replicate_edges(self):
        features = prosody.frame_f0_features(_f0_track([100.0, 0.0, 120.0]), 3)
        assert features.shape == (3, 6)
        np.testing.assert_array_equal(features[0], [100.0, 100.0, 0.0, 1.0, 1.0, 0.0])
        np.testing.assert_array_equal(features[2], [0.0, 120.0, 120.0, 0.0, 1.0, 1.0])

    def test_training_rows_are_voiced_on_both_sides(self):
        source = _f0_track([100.0, 110.0, 0.0, 120.0])
        target = _f0_track([200.0, 0.0, 210.0, 240.0])
        pair = UtterancePair(source, target, alignment=tuple((i, i) for i in range(4)))
        inputs, targets = prosody.build_frame_f0_training_set([pair], 3)
        assert inputs.shape == (2, 6)
        np.testing.assert_array_equal(targets[:, 0], [200.0, 240.0])

class TestDuration:
    def test_resample_indices(self):
        np.testing.assert_array_equal(prosody.resample_indices(10, 5), [0, 2, 5, 7, 9])
        np.testing.assert_array_equal(prosody.resample_indices(10, 1), [5])

    def test_samples_per_phone(self):
        source = FeatureTrack(np.arange(11.0).reshape(-1, 1), 0.005, ("logsp",))
        target = FeatureTrack(np.zeros((6, 1)), 0.005, ("logsp",))
        pair = UtterancePair(source, target, _phones(("a", 0, 4), ("b", 4, 10), ("c", 10, 11)),
                             _phones(("a", 0, 2), ("b", 2, 5), ("c", 5, 6)))
        samples = prosody.build_duration_samples(pair, 3)
        assert [s.label for s in samples] == ["a", "b"]
        np.testing.assert_array_equal(samples[0].input, [0.0, 2.0, 3.0])
        assert samples[0].ratio == pytest.approx(2.0)
        assert samples[1].ratio == pytest.approx(2.0)

    def test_retiming_shortens_a_phone(self):
        track = FeatureTrack(np.arange(10.0).reshape(-1, 1), 0.005, ("logsp",))
        (retimed,), phones = prosody.apply_duration([track], _phones(("a", 2, 6)), [2.0])
        np.testing.assert_allclose(retimed.data[:, 0], [0, 1, 2, 5, 6, 7, 8, 9])
        assert [(p.start_frame, p.end_frame) for p in phones] == [(2, 4)]

    def test_retiming_lengthens_and_keeps_vuv_binary(self):
        values = FeatureTrack(np.arange(6.0).reshape(-1, 1), 0.005, ("logsp",))
        f0vuv = _f0_track([0, 100, 110, 120, 0, 0])
        tracks, phones = prosody.apply_duration([values, f0vuv], _phones(("a", 1, 4), ("b", 4, 6)), [0.5, 1.0])
        assert tracks[0].n_frames == tracks[1].n_frames == 9
        assert set(np.unique(tracks[1].data[:, 1])) <= {0.0, 1.0}
        assert [(p.start_frame, p.end_frame) for p in phones] == [(1, 7), (7, 9)]

    def test_ratios_are_clamped(self):
        track = FeatureTrack(np.arange(8.0).reshape(-1, 1), 0.005, ("logsp",))
        (retimed,), _ = prosody.apply_duration([track], _phones(("a", 0, 8)), [10.0], clamp=(0.5, 2.0))
        assert retimed.n_frames == 4

    def test_ratio_count_mismatch(self):
        track = FeatureTrack(np.zeros((4, 1)), 0.005)
        with pytest.raises(InputValidationError, match="ratios"):
            prosody.apply_duration([track], _phones(("a", 0, 2)), [1.0, 1.0])

    def test_non_positive_ratio(self):
        track = FeatureTrack(np.zeros((4, 1)), 0.005)
        with pytest.raises(InputValidationError, match="positive"):
            prosody.apply_duration([track], _phones(("a", 0, 2)), [0.0])

    def test_tracks_must_share_timeline(self):
        with pytest.raises(InputValidationError, match="timeline"):
            prosody.apply_duration([FeatureTrack(np.zeros((4, 1)), 0.005), FeatureTrack(np.zeros((5, 1)), 0.005)],
                                   _phones(("a", 0, 2)), [1.0])

class TestConversion:
    def _identity_diffs(self, diffs: np.ndarray) -> np.ndarray:
        return diffs

    def test_identity_predictors_keep_ramps(self):
        track = _f0_track([0, 100, 110, 120, 130, 0, 150, 145, 140, 0])
        converted = prosody.convert_f0_track(track, 55, self._identity_diffs, lambda mean, s, e: mean)
        np.testing.assert_allclose(converted.data, track.data, atol=1e-9)

    def test_mean_shift_moves_every_voiced_frame(self):
        track = _f0_track([0, 100, 110, 120, 0, 140, 0])
        converted = prosody.convert_f0_track(track, 20, self._identity_diffs, lambda mean, s, e: mean + 50.0)
        np.testing.assert_allclose(converted.data[:, 0], [0, 150, 160, 170, 0, 190, 0], atol=1e-9)
        np.testing.assert_array_equal(converted.data[:, 1], track.data[:, 1])

    def test_intensity_is_applied_per_frame(self, small_analysis):
        envelope = FeatureTrack(np.full((6, 128), -3.0), 0.005, ("logsp",) * 128)
        wanted = np.array([-1.0, -2.0, -1.5])
        segment = VoicedSegment(2, 5, wanted, wanted, float(wanted.mean()))
        result = prosody.apply_intensity(envelope, [segment], small_analysis)
        np.testing.assert_allclose(analysis.envelope_log_rms(result.data[2:5], small_analysis), wanted, atol=1e-9)
        np.testing.assert_array_equal(result.data[:2], envelope.data[:2])
        np.testing.assert_array_equal(result.data[5:], envelope.data[5:])

    def test_intensity_segment_out_of_range(self, small_analysis):
        envelope = FeatureTrack(np.zeros((3, 128)), 0.005, ("logsp",) * 128)
        values = np.zeros(3)
        with pytest.raises(InputValidationError, match="outside"):
            prosody.apply_intensity(envelope, [VoicedSegment(1, 4, values, values, 0.0)], small_analysis)

    def test_predicted_intensity_segments(self):
        intensity = FeatureTrack(np.array([[-5.0], [-4.0], [-3.0], [-2.0]]), 0.005, ("intensity",))
        result = prosody.predict_intensity_segments(intensity, _f0_track([0, 100, 100, 100]), 5, lambda rows: rows + 1.0)
        assert len(result) == 1
        np.testing.assert_allclose(result[0].original_values, [-3.0, -2.0, -1.0])

class TestDump:
    def test_one_line_per_segment(self, tmp_path):
        segments = prosody.extract_voiced_segments(_f0_track([100, 110, 0, 120, 125]), 4)
        prosody.write_segment_dump(tmp_path / "seg.txt", "u1", segments)
        prosody.write_segment_dump(tmp_path / "seg.txt", "u2", segments, append=True)
        lines = (tmp_path / "seg.txt").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 4
        assert lines[0].split()[:4] == ["u1", "0", "0", "2"]
        assert len(lines[0].split()) == 5 + 4
