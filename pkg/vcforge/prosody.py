#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/prosody.py
Created: 2026-09-06 13:15:09 UTC

Description:
    Segment-level prosody. Voiced runs are length-normalized and modelled
    as whole trajectories: F0 through adjacent differences plus a predicted
    segment mean, intensity through its raw values. Also holds the global
    mean-variance F0 baseline, the frame-window F0 features, phone duration
    ratio samples and the retiming of converted tracks.
'''

import logging
from pathlib import Path
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from config import AnalysisConfig
from vcforge.analysis import envelope_log_rms
from vcforge.domain.domain import (
    DurationSample,
    F0DiffFeature,
    FeatureTrack,
    MeanVarStats,
    PhoneSegment,
    PhoneSegmentList,
    UtterancePair,
    VoicedSegment,
)
from vcforge.exceptions import InputValidationError, TrainingError

# Get a logger for this module
logger = logging.getLogger(__name__)

SegmentMeanPredictor = Callable[[float, int, int], float]
TrajectoryPredictor = Callable[[np.ndarray], np.ndarray]

"""=========================== VOICED SEGMENTS ==========================="""
def voiced_runs(vuv: np.ndarray, min_length: int = 2) -> List[Tuple[int, int]]:
    """Maximal [start, end) runs of voiced frames at least min_length long."""
    flags = np.concatenate([[0], (np.asarray(vuv) > 0.5).astype(np.int8), [0]])
    edges = np.flatnonzero(np.diff(flags))
    return [(int(s), int(e)) for s, e in zip(edges[::2], edges[1::2]) if e - s >= min_length]

def normalize_length(values: np.ndarray, length: int) -> np.ndarray:
    """Linear resampling of a trajectory to `length` points; endpoints are kept exactly."""
    values = np.asarray(values, dtype=np.float64)
    return np.interp(np.linspace(0, len(values) - 1, length), np.arange(len(values)), values)

def _check_value_track(track: FeatureTrack) -> None:
    if track.dim != 2:
        raise InputValidationError(f"expected a [value, vuv] track, got {track.dim} dims")

def extract_voiced_segments(f0vuv: FeatureTrack, segment_length: int, log_domain: bool = False) -> List[VoicedSegment]:
    """Voiced runs of a [value, vuv] track, each resampled to segment_length.

    Runs of a single frame are dropped. With log_domain the values are
    natural-log F0.
    """
    _check_value_track(f0vuv)
    if segment_length < 2:
        raise InputValidationError("segment length must be at least 2")
    values = f0vuv.data[:, 0]
    segments = []
    for start, end in voiced_runs(f0vuv.data[:, 1]):
        original = values[start:end]
        if log_domain:
            original = np.log(original)
        segments.append(VoicedSegment(start, end, original, normalize_length(original, segment_length),
                                      float(np.mean(original))))
    return segments

def intensity_with_voicing(intensity: FeatureTrack, f0vuv: FeatureTrack) -> FeatureTrack:
    """[log_intensity, vuv] track that reuses the F0 voicing decision."""
    if intensity.n_frames != f0vuv.n_frames:
        raise InputValidationError(f"intensity has {intensity.n_frames} frames, f0 has {f0vuv.n_frames}")
    return FeatureTrack(np.column_stack([intensity.data[:, 0], f0vuv.data[:, 1]]),
                        intensity.frame_shift_s, ("intensity", "vuv"))

def extract_intensity_segments(intensity: FeatureTrack, f0vuv: FeatureTrack, segment_length: int) -> List[VoicedSegment]:
    return extract_voiced_segments(intensity_with_voicing(intensity, f0vuv), segment_length)

"""=========================== F0 TRAJECTORIES ==========================="""
def f0_to_diff(segment: VoicedSegment) -> F0DiffFeature:
    """Adjacent differences of the normalized trajectory, led by 0."""
    return F0DiffFeature(np.concatenate([[0.0], np.diff(segment.normalized)]))

def reconstruct_segment(diff: F0DiffFeature, segment_mean: float) -> np.ndarray:
    """Cumulative sum starting at 0, then shifted so its mean is segment_mean."""
    trajectory = np.cumsum(diff.values)
    return trajectory - trajectory.mean() + segment_mean

def reconstruct_f0(diff: F0DiffFeature, segment_mean: float, original_length: int) -> np.ndarray:
    """Mean-adjusted trajectory re-interpolated to the segment's original length."""
    if original_length < 2:
        raise InputValidationError("original segment length must be at least 2")
    return normalize_length(reconstruct_segment(diff, segment_mean), original_length)

def meanvar_transform(f0: Union[float, np.ndarray], stats: MeanVarStats) -> Union[float, np.ndarray]:
    """Global mean-variance F0 mapping; zeros (unvoiced) stay zero."""
    values = np.asarray(f0, dtype=np.float64)
    mapped = stats.target_mean + (stats.target_std / stats.source_std) * (values - stats.source_mean)
    result = np.where(values > 0, mapped, 0.0)
    return float(result) if result.ndim == 0 else result

def fit_meanvar(source_f0: Sequence[FeatureTrack], target_f0: Sequence[FeatureTrack],
                log_domain: bool = False) -> MeanVarStats:
    """Mean and population standard deviation of voiced F0 for each speaker.

    Raises:
        TrainingError: If a speaker has no voiced frames or constant F0.
    """
    def stats(tracks: Sequence[FeatureTrack], who: str) -> Tuple[float, float]:
        voiced = np.concatenate([t.data[t.data[:, 1] > 0.5, 0] for t in tracks]) if tracks else np.array([])
        if len(voiced) == 0:
            raise TrainingError(f"no voiced {who} frames to fit mean-variance statistics")
        if log_domain:
            voiced = np.log(voiced)
        std = float(voiced.std())
        if std <= 0:
            raise TrainingError(f"{who} F0 has zero variance")
        return float(voiced.mean()), std

    source_mean, source_std = stats(source_f0, "source")
    target_mean, target_std = stats(target_f0, "target")
    return MeanVarStats(source_mean, source_std, target_mean, target_std)

def predict_segment_mean(source_mean: float, stats: MeanVarStats) -> float:
    """Segment mean level mapped with the global mean-variance transform."""
    if source_mean <= 0:
        raise InputValidationError(f"segment mean must be positive, got {source_mean}")
    return float(meanvar_transform(source_mean, stats))

def predict_segment_mean_from_frames(frame_predictions: np.ndarray, start: int, end: int) -> float:
    """Segment mean level as the average of frame-level F0 predictions over [start, end)."""
    if not 0 <= start < end <= len(frame_predictions):
        raise InputValidationError(f"span [{start}, {end}) outside {len(frame_predictions)} predictions")
    return float(np.mean(frame_predictions[start:end]))

"""=========================== TRAINING SETS ==========================="""
def _segment_owner(n_frames: int, segments: Sequence[VoicedSegment]) -> np.ndarray:
    owner = np.full(n_frames, -1)
    for index, segment in enumerate(segments):
        owner[segment.start_frame:segment.end_frame] = index
    return owner

def pair_segments(source_segments: Sequence[VoicedSegment], target_segments: Sequence[VoicedSegment],
                  alignment: Sequence[Tuple[int, int]], n_target_frames: int) -> List[Tuple[int, int]]:
    """Match each source segment to the target segment owning most of its aligned target frames.

    Ties go to the earliest target segment. Source segments whose aligned
    frames fall in no target segment are left out.
    """
    path = np.asarray(alignment, dtype=int).reshape(-1, 2)
    target_owner = _segment_owner(n_target_frames, target_segments)
    matches = []
    for src_index, segment in enumerate(source_segments):
        inside = (path[:, 0] >= segment.start_frame) & (path[:, 0] < segment.end_frame)
        owners = target_owner[path[inside, 1]]
        owners = owners[owners >= 0]
        if len(owners) == 0:
            continue
        counts = np.bincount(owners, minlength=len(target_segments))
        matches.append((src_index, int(np.argmax(counts))))
    return matches

def _segment_training_set(pairs: Sequence[UtterancePair], segment_length: int, differenced: bool,
                          log_domain: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    inputs, targets = [], []
    dropped = 0
    for pair in pairs:
        if pair.alignment is None:
            raise InputValidationError(f"{pair.utt_id}: segment training needs an aligned pair")
        src = extract_voiced_segments(pair.source, segment_length, log_domain)
        tgt = extract_voiced_segments(pair.target, segment_length, log_domain)
        matches = pair_segments(src, tgt, pair.alignment, pair.target.n_frames)
        dropped += len(src) - len(matches)
        for src_index, tgt_index in matches:
            if differenced:
                inputs.append(f0_to_diff(src[src_index]).values)
                targets.append(f0_to_diff(tgt[tgt_index]).values)
            else:
                inputs.append(src[src_index].normalized)
                targets.append(tgt[tgt_index].normalized)
    if not inputs:
        raise TrainingError("no matched voiced segments in the training pairs")
    logger.info(f"Segment training set: {len(inputs)} matched segments, {dropped} unmatched dropped")
    return np.vstack(inputs), np.vstack(targets)

def build_f0_training_set(pairs: Sequence[UtterancePair], segment_length: int,
                          log_domain: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Paired source/target F0 difference features, one row per matched segment.

    Each pair carries [f0, vuv] tracks and an alignment.

    Raises:
        TrainingError: If no segment can be matched.
    """
    return _segment_training_set(pairs, segment_length, differenced=True, log_domain=log_domain)

def build_intensity_training_set(pairs: Sequence[UtterancePair], segment_length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Paired normalized log-intensity trajectories; pairs carry [intensity, vuv] tracks."""
    return _segment_training_set(pairs, segment_length, differenced=False)

def frame_f0_features(f0vuv: FeatureTrack, window: int, log_domain: bool = False) -> np.ndarray:
    """F0 and VUV values of the `window` frames centred on each frame, edges replicated."""
    _check_value_track(f0vuv)
    half = window // 2
    f0 = f0vuv.data[:, 0]
    if log_domain:
        f0 = np.where(f0 > 0, np.log(np.where(f0 > 0, f0, 1.0)), 0.0)
    padded = np.pad(np.column_stack([f0, f0vuv.data[:, 1]]), ((half, half), (0, 0)), mode="edge")
    offsets = np.arange(f0vuv.n_frames)[:, None] + np.arange(window)[None, :]
    return np.hstack([padded[offsets, 0], padded[offsets, 1]])

def build_frame_f0_training_set(pairs: Sequence[UtterancePair], window: int,
                                log_domain: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Frame-window inputs and aligned target F0 over frames voiced on both sides."""
    if not pairs:
        raise TrainingError("no utterance pairs for frame-level F0 training")
    inputs, targets = [], []
    for pair in pairs:
        if pair.alignment is None:
            raise InputValidationError(f"{pair.utt_id}: frame training needs an aligned pair")
        features = frame_f0_features(pair.source, window, log_domain)
        path = np.asarray(pair.alignment, dtype=int).reshape(-1, 2)
        voiced = (pair.source.data[path[:, 0], 1] > 0.5) & (pair.target.data[path[:, 1], 1] > 0.5)
        target = pair.target.data[path[voiced, 1], 0]
        inputs.append(features[path[voiced, 0]])
        targets.append(np.log(target) if log_domain else target)
    inputs_matrix, targets_vector = np.vstack(inputs), np.concatenate(targets)
    if len(inputs_matrix) == 0:
        raise TrainingError("no frames voiced in both speakers")
    return inputs_matrix, targets_vector.reshape(-1, 1)

"""=========================== DURATION ==========================="""
def resample_indices(length: int, n_samples: int) -> np.ndarray:
    """Uniform positions floor(i*(length-1)/(n-1) + 0.5) within a span of `length` frames."""
    if n_samples == 1:
        return np.array([int(np.floor((length - 1) / 2 + 0.5))])
    return np.floor(np.arange(n_samples) * (length - 1) / (n_samples - 1) + 0.5).astype(int)

def build_duration_samples(pair: UtterancePair, n_frames: int) -> List[DurationSample]:
    """One sample per phone: n_frames sampled static source frames and the source/target length ratio.

    Phones shorter than two frames on either side are skipped.
    """
    if n_frames < 1:
        raise InputValidationError("duration sampling needs at least one frame")
    static = pair.source.data[:, pair.source.static_columns()]
    samples = []
    for src, tgt in zip(pair.source_phones, pair.target_phones):
        if src.length < 2 or tgt.length < 2:
            continue
        rows = static[src.start_frame + resample_indices(src.length, n_frames)]
        samples.append(DurationSample(rows.reshape(-1), src.length / tgt.length, src.label))
    return samples

def _retime_positions(n_frames: int, phones: PhoneSegmentList, ratios: Sequence[float],
                      clamp: Tuple[float, float]) -> Tuple[np.ndarray, PhoneSegmentList]:
    positions: List[np.ndarray] = []
    retimed: List[PhoneSegment] = []
    cursor = 0
    out_length = 0
    for phone, ratio in zip(phones, ratios):
        gap = np.arange(cursor, phone.start_frame, dtype=np.float64)
        positions.append(gap)
        out_length += len(gap)
        ratio = float(np.clip(ratio, *clamp))
        new_length = max(1, int(np.floor(phone.length / ratio + 0.5)))
        positions.append(np.linspace(phone.start_frame, phone.end_frame - 1, new_length))
        retimed.append(PhoneSegment(phone.label, out_length, out_length + new_length))
        out_length += new_length
        cursor = phone.end_frame
    positions.append(np.arange(cursor, n_frames, dtype=np.float64))
    return np.concatenate(positions), PhoneSegmentList(tuple(retimed))

def _resample_track(track: FeatureTrack, positions: np.ndarray) -> FeatureTrack:
    last = track.n_frames - 1
    if track.dim_labels and "vuv" in track.dim_labels:
        rows = np.minimum(np.floor(positions + 0.5).astype(int), last)
        return track.with_data(track.data[rows])
    lower = np.minimum(np.floor(positions).astype(int), last)
    upper = np.minimum(lower + 1, last)
    frac = (positions - lower)[:, None]
    return track.with_data(track.data[lower] * (1.0 - frac) + track.data[upper] * frac)

def apply_duration(tracks: Sequence[FeatureTrack], phones: PhoneSegmentList, ratios: Sequence[float],
                   clamp: Tuple[float, float] = (0.5, 2.0)) -> Tuple[List[FeatureTrack], PhoneSegmentList]:
    """Retime every track phone by phone to length floor(len/ratio + 0.5).

    Ratios are clamped first. Frames between phones keep their timing.
    Tracks carrying a "vuv" dimension are resampled by nearest neighbour,
    all others linearly.

    Raises:
        InputValidationError: On ratio count or track length mismatches, or non-positive ratios.
    """
    if len(ratios) != len(phones):
        raise InputValidationError(f"{len(ratios)} ratios for {len(phones)} phones")
    if any(not r > 0 for r in ratios):
        raise InputValidationError("duration ratios must be positive")
    if not tracks:
        raise InputValidationError("apply_duration needs at least one track")
    n_frames = tracks[0].n_frames
    if any(track.n_frames != n_frames for track in tracks):
        raise InputValidationError("all retimed tracks must share one timeline")
    phones.validate_against(n_frames)

    positions, retimed_phones = _retime_positions(n_frames, phones, ratios, clamp)
    logger.debug(f"Retimed {n_frames} frames to {len(positions)}")
    return [_resample_track(track, positions) for track in tracks], retimed_phones

"""=========================== CONVERSION ==========================="""
def convert_f0_track(f0vuv: FeatureTrack, segment_length: int, predict_diffs: TrajectoryPredictor,
                     predict_mean: SegmentMeanPredictor, log_domain: bool = False) -> FeatureTrack:
    """Replace every voiced run with a predicted trajectory.

    Runs of two or more frames are converted through their difference
    features and a predicted mean level; single voiced frames take the
    predicted mean of their own value. VUV is unchanged.
    """
    _check_value_track(f0vuv)
    converted = f0vuv.data.copy()
    segments = extract_voiced_segments(f0vuv, segment_length, log_domain)
    if segments:
        diffs = predict_diffs(np.vstack([f0_to_diff(s).values for s in segments]))
        for segment, row in zip(segments, np.atleast_2d(diffs)):
            row = np.concatenate([[0.0], row[1:]])
            mean = predict_mean(segment.mean, segment.start_frame, segment.end_frame)
            trajectory = reconstruct_f0(F0DiffFeature(row), mean, segment.length)
            converted[segment.start_frame:segment.end_frame, 0] = np.exp(trajectory) if log_domain else trajectory
    for start, end in voiced_runs(f0vuv.data[:, 1], min_length=1):
        if end - start == 1:
            value = float(f0vuv.data[start, 0])
            mean = predict_mean(np.log(value) if log_domain else value, start, end)
            converted[start, 0] = np.exp(mean) if log_domain else mean
    return f0vuv.with_data(converted)

def predict_intensity_segments(intensity: FeatureTrack, f0vuv: FeatureTrack, segment_length: int,
                               predict: TrajectoryPredictor) -> List[VoicedSegment]:
    """Predicted log-intensity trajectories at the original segment lengths."""
    segments = extract_intensity_segments(intensity, f0vuv, segment_length)
    if not segments:
        return []
    predicted = np.atleast_2d(predict(np.vstack([s.normalized for s in segments])))
    result = []
    for segment, row in zip(segments, predicted):
        values = normalize_length(row, segment.length)
        result.append(VoicedSegment(segment.start_frame, segment.end_frame, values, row, float(values.mean())))
    return result

def apply_intensity(envelope: FeatureTrack, predicted: Sequence[VoicedSegment], config: AnalysisConfig) -> FeatureTrack:
    """Offset each envelope frame in a segment so its implied log RMS equals the prediction.

    Raises:
        InputValidationError: If a segment extends beyond the track.
    """
    data = envelope.data.copy()
    static = envelope.static_columns()
    for segment in predicted:
        if not 0 <= segment.start_frame < segment.end_frame <= envelope.n_frames:
            raise InputValidationError(
                f"intensity segment [{segment.start_frame}, {segment.end_frame}) outside {envelope.n_frames} frames")
        if len(segment.original_values) != segment.length:
            raise InputValidationError("predicted intensity must have one value per segment frame")
        rows = slice(segment.start_frame, segment.end_frame)
        current = envelope_log_rms(data[rows][:, static], config)
        offset = np.asarray(segment.original_values) - current
        data[rows, static] = data[rows][:, static] + offset[:, None]
    return envelope.with_data(data)

"""=========================== DUMPS ==========================="""
def write_segment_dump(path: Union[str, Path], utt_id: str, segments: Sequence[VoicedSegment],
                       append: bool = False) -> None:
    """Lines of `utt_id seg_idx start end mean` followed by the normalized values."""
    lines = [
        f"{utt_id} {index} {s.start_frame} {s.end_frame} {s.mean:.6f} "
        + " ".join(f"{v:.6f}" for v in s.normalized)
        for index, s in enumerate(segments)
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a" if append else "w", encoding="utf-8") as f:
        f.writelines(line + "\n" for line in lines)
