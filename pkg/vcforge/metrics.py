#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/metrics.py
Created: 2026-09-07 16:50:13 UTC

Description:
    Objective evaluation: log spectral distortion ratio of converted versus
    unconverted speech against the target, F0 RMSE over frames voiced in
    both tracks, and the report files built from them.
'''

import csv
import logging
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from rich.console import Console
from rich.table import Table

from vcforge.domain.domain import EvalReport, FeatureTrack, PhoneSegmentList, UtteranceScore
from vcforge.exceptions import FeatureFormatError, InputValidationError, UndefinedMetricError

# Get a logger for this module
logger = logging.getLogger(__name__)

SILENCE_LABELS = frozenset({"sil", "pau", "sp", "h#"})
Frames = Union[FeatureTrack, np.ndarray]
Path2D = Sequence[Tuple[int, int]]

class F0Comparison(NamedTuple):
    rmse_hz: float
    n_voiced_both: int
    n_mismatch: int
    mismatch_rate: float

def _log_spectra(frames: Frames, domain: str) -> np.ndarray:
    if isinstance(frames, FeatureTrack):
        values = frames.data[:, frames.static_columns()]
    else:
        values = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if domain == "log":
        return values
    if domain == "linear":
        if np.any(values <= 0):
            raise InputValidationError("linear-magnitude spectra must be strictly positive")
        return np.log(values)
    raise InputValidationError(f"unknown spectral domain '{domain}', expected 'log' or 'linear'")

def frame_distortion(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-frame sum over bins of squared log-spectral differences."""
    return np.sum((a - b) ** 2, axis=1)

def lsd_ratio(source: Frames, converted: Frames, target: Frames, domain: str = "log") -> float:
    """Converted-to-target over source-to-target log spectral distortion, in percent.

    Frames must already be aligned row by row. Frames whose source-to-target
    distortion is 0 are left out of both sums.

    Raises:
        InputValidationError: On shape mismatches or an unknown domain.
        UndefinedMetricError: If every source-to-target distortion is 0.
    """
    x, x_hat, y = (_log_spectra(f, domain) for f in (source, converted, target))
    if not x.shape == x_hat.shape == y.shape:
        raise InputValidationError(f"LSD shapes differ: {x.shape}, {x_hat.shape}, {y.shape}")
    denominator = frame_distortion(x, y)
    keep = denominator > 0
    if not keep.any():
        raise UndefinedMetricError("source and target are identical on every frame; LSD ratio undefined")
    return 100.0 * float(frame_distortion(x_hat, y)[keep].sum() / denominator[keep].sum())

def _path_arrays(path: Path2D, mask: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    pairs = np.asarray(path, dtype=int).reshape(-1, 2)
    if mask is not None:
        pairs = pairs[mask[pairs[:, 0]]]
    return pairs[:, 0], pairs[:, 1]

def lsd_ratio_over_paths(source: FeatureTrack, converted: FeatureTrack, target: FeatureTrack,
                         source_path: Path2D, converted_path: Path2D,
                         source_mask: Optional[np.ndarray] = None,
                         converted_mask: Optional[np.ndarray] = None) -> float:
    """LSD ratio when source and converted are each aligned to the target by their own path.

    With identical paths and masks this equals lsd_ratio on the gathered
    frames. Otherwise the two distortions are averaged over their own paths
    before the ratio is taken.
    """
    x, x_hat, y = (_log_spectra(f, "log") for f in (source, converted, target))
    src_i, src_j = _path_arrays(source_path, source_mask)
    conv_i, conv_j = _path_arrays(converted_path, converted_mask)
    if len(src_i) == 0 or len(conv_i) == 0:
        raise UndefinedMetricError("no frames left to evaluate")

    same_timeline = (np.array_equal(src_i, conv_i) and np.array_equal(src_j, conv_j))
    if same_timeline:
        return lsd_ratio(x[src_i], x_hat[conv_i], y[conv_j])

    denominator = frame_distortion(x[src_i], y[src_j])
    keep = denominator > 0
    if not keep.any():
        raise UndefinedMetricError("source and target are identical on every frame; LSD ratio undefined")
    numerator = frame_distortion(x_hat[conv_i], y[conv_j])
    return 100.0 * float(numerator.mean() / denominator[keep].mean())

def _f0_columns(track: Frames) -> np.ndarray:
    values = track.data if isinstance(track, FeatureTrack) else np.atleast_2d(np.asarray(track, dtype=np.float64))
    if values.shape[1] != 2:
        raise InputValidationError(f"expected [f0, vuv] frames, got {values.shape[1]} columns")
    return values

def f0_comparison(converted_f0: Frames, target_f0: Frames) -> F0Comparison:
    """RMSE over frames voiced in both tracks plus the voicing mismatch count.

    Raises:
        InputValidationError: On different frame counts.
        UndefinedMetricError: If no frame is voiced in both tracks.
    """
    converted, target = _f0_columns(converted_f0), _f0_columns(target_f0)
    if len(converted) != len(target):
        raise InputValidationError(f"F0 tracks have {len(converted)} and {len(target)} frames")
    conv_voiced, tgt_voiced = converted[:, 1] > 0.5, target[:, 1] > 0.5
    both = conv_voiced & tgt_voiced
    mismatch = int(np.sum(conv_voiced != tgt_voiced))
    if not both.any():
        raise UndefinedMetricError("no frames are voiced in both F0 tracks")
    rmse = float(np.sqrt(np.mean((converted[both, 0] - target[both, 0]) ** 2)))
    return F0Comparison(rmse, int(both.sum()), mismatch, mismatch / len(converted))

def f0_rmse(converted_f0: Frames, target_f0: Frames) -> float:
    """F0 RMSE in Hz over frames voiced in both tracks."""
    return f0_comparison(converted_f0, target_f0).rmse_hz

def speech_mask(phones: PhoneSegmentList, n_frames: int) -> np.ndarray:
    """True on frames inside phones whose label is not a silence label."""
    mask = np.zeros(n_frames, dtype=bool)
    for phone in phones:
        if phone.label.lower() not in SILENCE_LABELS:
            mask[phone.start_frame:min(phone.end_frame, n_frames)] = True
    return mask

def score_utterance(utt_id: str, source: FeatureTrack, converted: FeatureTrack, target: FeatureTrack,
                    source_path: Path2D, converted_path: Path2D,
                    converted_f0: Optional[FeatureTrack] = None, target_f0: Optional[FeatureTrack] = None,
                    source_phones: Optional[PhoneSegmentList] = None,
                    converted_phones: Optional[PhoneSegmentList] = None) -> UtteranceScore:
    """All per-utterance scores; target frames are reached through the two paths."""
    lsd = lsd_ratio_over_paths(source, converted, target, source_path, converted_path)

    lsd_speech = None
    if source_phones is not None and converted_phones is not None:
        try:
            lsd_speech = lsd_ratio_over_paths(
                source, converted, target, source_path, converted_path,
                speech_mask(source_phones, source.n_frames), speech_mask(converted_phones, converted.n_frames))
        except UndefinedMetricError as e:
            logger.warning(f"{utt_id}: speech-only LSD undefined ({e})")

    rmse, mismatch_rate = None, None
    if converted_f0 is not None and target_f0 is not None:
        conv_i, conv_j = _path_arrays(converted_path, None)
        try:
            comparison = f0_comparison(converted_f0.data[conv_i], target_f0.data[conv_j])
            rmse, mismatch_rate = comparison.rmse_hz, comparison.mismatch_rate
        except UndefinedMetricError as e:
            logger.warning(f"{utt_id}: F0 RMSE undefined ({e})")

    return UtteranceScore(utt_id, lsd, lsd_speech, rmse, mismatch_rate,
                          n_bins=len(source.static_columns()), n_frames=len(converted_path))

def _mean_or_none(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None

def aggregate(system: str, scores: Sequence[UtteranceScore], excluded: Sequence[str] = ()) -> EvalReport:
    """Per-system report: every score is the mean over utterances where it is defined.

    Raises:
        UndefinedMetricError: If no utterance was scored.
    """
    if not scores:
        raise UndefinedMetricError(f"{system}: no utterances evaluated")
    return EvalReport(
        system=system,
        lsd_percent=float(np.mean([s.lsd_percent for s in scores])),
        lsd_speech_percent=_mean_or_none([s.lsd_speech_percent for s in scores]),
        f0_rmse_hz=_mean_or_none([s.f0_rmse_hz for s in scores]),
        voicing_mismatch_rate=_mean_or_none([s.voicing_mismatch_rate for s in scores]),
        utterances=tuple(scores),
        excluded=tuple(excluded),
    )

"""=========================== REPORT FILES ==========================="""
def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "-" if value is None else f"{value:.{digits}f}"

def report_table(report: EvalReport) -> Table:
    """Rich table of per-utterance scores with the system mean as the last row."""
    table = Table(title=f"Evaluation: {report.system}", show_lines=False)
    table.add_column("Utterance", style="cyan")
    table.add_column("LSD %", justify="right")
    table.add_column("LSD speech %", justify="right")
    table.add_column("F0 RMSE Hz", justify="right")
    table.add_column("VUV mismatch", justify="right")
    table.add_column("Frames", justify="right")
    for score in report.utterances:
        table.add_row(score.utt_id, _fmt(score.lsd_percent), _fmt(score.lsd_speech_percent),
                      _fmt(score.f0_rmse_hz), _fmt(score.voicing_mismatch_rate, 3), str(score.n_frames))
    table.add_row("[bold]mean[/bold]", _fmt(report.lsd_percent), _fmt(report.lsd_speech_percent),
                  _fmt(report.f0_rmse_hz), _fmt(report.voicing_mismatch_rate, 3), "", end_section=True)
    return table

def write_report_text(report: EvalReport, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        console = Console(file=f, width=110, color_system=None, force_terminal=False)
        console.print(report_table(report))
        if report.excluded:
            console.print(f"Excluded (id mismatch): {', '.join(report.excluded)}")

def _kv(value: Optional[float]) -> str:
    return "none" if value is None else repr(float(value))

def write_report_kv(report: EvalReport, path: Union[str, Path]) -> None:
    """Machine-readable `key=value` lines; floats are written with full precision."""
    lines = [
        f"system={report.system}",
        f"n_utterances={len(report.utterances)}",
        f"lsd_percent={_kv(report.lsd_percent)}",
        f"lsd_speech_percent={_kv(report.lsd_speech_percent)}",
        f"f0_rmse_hz={_kv(report.f0_rmse_hz)}",
        f"voicing_mismatch_rate={_kv(report.voicing_mismatch_rate)}",
        f"excluded={','.join(report.excluded)}",
    ]
    for score in report.utterances:
        prefix = f"utt.{score.utt_id}"
        lines += [
            f"{prefix}.lsd_percent={_kv(score.lsd_percent)}",
            f"{prefix}.lsd_speech_percent={_kv(score.lsd_speech_percent)}",
            f"{prefix}.f0_rmse_hz={_kv(score.f0_rmse_hz)}",
            f"{prefix}.voicing_mismatch_rate={_kv(score.voicing_mismatch_rate)}",
            f"{prefix}.n_frames={score.n_frames}",
        ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

def read_report_kv(path: Union[str, Path]) -> Dict[str, str]:
    """Parse a file written by write_report_kv.

    Raises:
        FeatureFormatError: On lines without '='.
    """
    values: Dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FeatureFormatError(f"{path}:{lineno}: expected key=value")
        values[key] = value
    return values

def write_report_csv(report: EvalReport, path: Union[str, Path]) -> None:
    """Per-utterance rows for plotting."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["system", "utt_id", "lsd_percent", "lsd_speech_percent", "f0_rmse_hz",
                         "voicing_mismatch_rate", "n_bins", "n_frames"])
        for s in report.utterances:
            writer.writerow([report.system, s.utt_id, _kv(s.lsd_percent), _kv(s.lsd_speech_percent),
                             _kv(s.f0_rmse_hz), _kv(s.voicing_mismatch_rate), s.n_bins, s.n_frames])
