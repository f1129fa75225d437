#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/domain/domain.py
Created: 2026-09-02 11:40:12 UTC

Description:
    This module defines the dataclass containers shared by every other module.
'''
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from vcforge.exceptions import InputValidationError

STATIC_LABELS = ("logsp",)
DYNAMIC_LABELS = ("delta", "deltadelta")

@dataclass(frozen=True)
class Audio:
    """Sampled mono audio.

    Attributes:
        samples (np.ndarray): 1-D float64 samples scaled to [-1, 1].
        sample_rate (int): Samples per second.
    """
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InputValidationError(f"audio must be 1-D, got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise InputValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

@dataclass(frozen=True, eq=False)
class FeatureTrack:
    """A time-indexed matrix of per-frame feature vectors.

    Attributes:
        data (np.ndarray): frames x dims float64 matrix, read-only.
        frame_shift_s (float): Seconds per frame.
        dim_labels (Optional[Tuple[str, ...]]): Per-dimension tags, e.g. "logsp", "delta", "vuv".

    Raises:
        InputValidationError: On dims < 1, frame_shift_s <= 0, non-finite
            values or a label count that does not match the dimension.
    """
    data: np.ndarray
    frame_shift_s: float
    dim_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[1] < 1:
            raise InputValidationError(f"track data must be frames x dims with dims >= 1, got shape {data.shape}")
        if not self.frame_shift_s > 0:
            raise InputValidationError(f"frame_shift_s must be positive, got {self.frame_shift_s}")
        if not np.all(np.isfinite(data)):
            raise InputValidationError("track contains non-finite values")
        labels = self.dim_labels
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != data.shape[1]:
                raise InputValidationError(f"{len(labels)} dim labels for {data.shape[1]} dims")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dim_labels", labels)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n_frames

    def same_as(self, other: "FeatureTrack") -> bool:
        """Bit-exact equality of data, frame shift and labels."""
        return (
            self.frame_shift_s == other.frame_shift_s
            and self.dim_labels == other.dim_labels
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    def slice(self, start: int, end: int) -> "FeatureTrack":
        """Frames [start, end) as a new track."""
        if not 0 <= start <= end <= self.n_frames:
            raise InputValidationError(f"slice [{start}, {end}) outside track of {self.n_frames} frames")
        return replace(self, data=self.data[start:end])

    def columns(self, indices: Sequence[int]) -> "FeatureTrack":
        """Selected dimensions as a new track."""
        indices = list(indices)
        labels = tuple(self.dim_labels[i] for i in indices) if self.dim_labels else None
        return FeatureTrack(self.data[:, indices], self.frame_shift_s, labels)

    def static_columns(self) -> List[int]:
        """Indices of static dimensions (everything except deltas and the VUV flag)."""
        if self.dim_labels is None:
            return list(range(self.dim))
        return [i for i, label in enumerate(self.dim_labels) if label not in DYNAMIC_LABELS + ("vuv",)]

    def with_data(self, data: np.ndarray) -> "FeatureTrack":
        """Same metadata, new matrix (labels dropped if the width changes)."""
        data = np.asarray(data, dtype=np.float64)
        labels = self.dim_labels if data.ndim == 2 and data.shape[1] == self.dim else None
        return FeatureTrack(data, self.frame_shift_s, labels)

    @staticmethod
    def hstack(tracks: Sequence["FeatureTrack"]) -> "FeatureTrack":
        """Concatenate equally long tracks along the dimension axis."""
        if not tracks:
            raise InputValidationError("hstack needs at least one track")
        n_frames = {track.n_frames for track in tracks}
        if len(n_frames) != 1:
            raise InputValidationError(f"hstack frame count mismatch: {sorted(n_frames)}")
        labels: Optional[Tuple[str, ...]] = None
        if all(track.dim_labels for track in tracks):
            labels = tuple(label for track in tracks for label in track.dim_labels)
        return FeatureTrack(np.hstack([track.data for track in tracks]), tracks[0].frame_shift_s, labels)

@dataclass(frozen=True)
class PhoneSegment:
    """One labelled phone span [start_frame, end_frame)."""
    label: str
    start_frame: int
    end_frame: int

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame

@dataclass(frozen=True)
class PhoneSegmentList:
    """Ordered, non-overlapping phone segments.

    Raises:
        InputValidationError: If any segment is empty, negative or overlaps its predecessor.
    """
    entries: Tuple[PhoneSegment, ...] = ()

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        previous_end = 0
        for entry in entries:
            if not 0 <= entry.start_frame < entry.end_frame:
                raise InputValidationError(
                    f"phone '{entry.label}' has invalid span [{entry.start_frame}, {entry.end_frame})")
            if entry.start_frame < previous_end:
                raise InputValidationError(f"phone '{entry.label}' overlaps or precedes its predecessor")
            previous_end = entry.end_frame
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index: int) -> PhoneSegment:
        return self.entries[index]

    @property
    def labels(self) -> List[str]:
        return [entry.label for entry in self.entries]

    def validate_against(self, n_frames: int) -> None:
        """Check every segment ends within a track of n_frames."""
        if self.entries and self.entries[-1].end_frame > n_frames:
            raise InputValidationError(
                f"phone segments end at frame {self.entries[-1].end_frame} beyond track length {n_frames}")

@dataclass(frozen=True, eq=False)
class UtterancePair:
    """Parallel source/target features of one utterance.

    Attributes:
        source (FeatureTrack): Source speaker track.
        target (FeatureTrack): Target speaker track.
        source_phones (PhoneSegmentList): Source phone boundaries.
        target_phones (PhoneSegmentList): Target phone boundaries.
        alignment (Optional[Tuple[Tuple[int, int], ...]]): Monotone (source_frame, target_frame) path.
        utt_id (str): Utterance identifier.
    """
    source: FeatureTrack
    target: FeatureTrack
    source_phones: PhoneSegmentList = field(default_factory=PhoneSegmentList)
    target_phones: PhoneSegmentList = field(default_factory=PhoneSegmentList)
    alignment: Optional[Tuple[Tuple[int, int], ...]] = None
    utt_id: str = ""

    def __post_init__(self) -> None:
        if len(self.source_phones) != len(self.target_phones):
            raise InputValidationError(
                f"{self.utt_id}: {len(self.source_phones)} source phones vs {len(self.target_phones)} target phones")
        for index, (src, tgt) in enumerate(zip(self.source_phones, self.target_phones)):
            if src.label != tgt.label:
                raise InputValidationError(
                    f"{self.utt_id}: phone {index} label mismatch '{src.label}' vs '{tgt.label}'")
        self.source_phones.validate_against(self.source.n_frames)
        self.target_phones.validate_against(self.target.n_frames)
        if self.alignment is not None:
            path = tuple((int(i), int(j)) for i, j in self.alignment)
            for (i0, j0), (i1, j1) in zip(path, path[1:]):
                if i1 < i0 or j1 < j0:
                    raise InputValidationError(f"{self.utt_id}: alignment is not monotone at ({i1}, {j1})")
            object.__setattr__(self, "alignment", path)

    def with_tracks(self, source: FeatureTrack, target: FeatureTrack) -> "UtterancePair":
        """Same boundaries and alignment over a different pair of equally long tracks."""
        if source.n_frames != self.source.n_frames or target.n_frames != self.target.n_frames:
            raise InputValidationError(f"{self.utt_id}: replacement tracks must keep frame counts")
        return replace(self, source=source, target=target)

@dataclass(frozen=True)
class WarpingPath:
    """Result of a DTW alignment: (source, target) index pairs and accumulated cost."""
    pairs: Tuple[Tuple[int, int], ...]
    cost: float

@dataclass(frozen=True, eq=False)
class VoicedSegment:
    """One contiguous voiced run of a prosodic trajectory.

    Attributes:
        start_frame (int): First frame in the parent track.
        end_frame (int): Exclusive end frame in the parent track.
        original_values (np.ndarray): Per-frame values (F0 in Hz or log intensity).
        normalized (np.ndarray): Values resampled to the fixed segment length.
        mean (float): Mean of original_values.
    """
    start_frame: int
    end_frame: int
    original_values: np.ndarray
    normalized: np.ndarray
    mean: float

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame

@dataclass(frozen=True, eq=False)
class F0DiffFeature:
    """Differences of adjacent normalized F0 values; first element is exactly 0."""
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) < 2:
            raise InputValidationError("F0 difference feature must be a vector of length >= 2")
        if values[0] != 0.0:
            raise InputValidationError("first F0 difference element must be 0")
        object.__setattr__(self, "values", values)

@dataclass(frozen=True)
class MeanVarStats:
    """Global F0 mean and standard deviation of source and target speakers."""
    source_mean: float
    source_std: float
    target_mean: float
    target_std: float

    def __post_init__(self) -> None:
        if not (self.source_std > 0 and self.target_std > 0):
            raise InputValidationError("mean-variance statistics need positive standard deviations")

@dataclass(frozen=True, eq=False)
class DurationSample:
    """Sampled spectral frames of one source phone and its duration ratio."""
    input: np.ndarray
    ratio: float
    label: str = ""

    def __post_init__(self) -> None:
        if not self.ratio > 0:
            raise InputValidationError(f"duration ratio must be positive, got {self.ratio}")

@dataclass(frozen=True)
class UtteranceScore:
    """Objective scores of one evaluated utterance."""
    utt_id: str
    lsd_percent: float
    lsd_speech_percent: Optional[float]
    f0_rmse_hz: Optional[float]
    voicing_mismatch_rate: Optional[float]
    n_bins: int
    n_frames: int

@dataclass(frozen=True)
class EvalReport:
    """Aggregated objective evaluation of one system (means over utterances)."""
    system: str
    lsd_percent: float
    lsd_speech_percent: Optional[float]
    f0_rmse_hz: Optional[float]
    voicing_mismatch_rate: Optional[float]
    utterances: Tuple[UtteranceScore, ...]
    excluded: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.lsd_percent < 0 or (self.f0_rmse_hz is not None and self.f0_rmse_hz < 0):
            raise InputValidationError("evaluation scores must be non-negative")
