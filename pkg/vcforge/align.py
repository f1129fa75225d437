#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/align.py
Created: 2026-09-03 14:02:51 UTC

Description:
    Two-stage alignment of parallel utterances. Phone boundaries cut both
    recordings into corresponding segments, and each segment pair is then
    aligned frame by frame with dynamic time warping.
'''

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from config import DtwConfig
from vcforge.domain.domain import FeatureTrack, UtterancePair, WarpingPath
from vcforge.exceptions import AlignmentStateError, FeatureFormatError, InputValidationError

# Get a logger for this module
logger = logging.getLogger(__name__)

FramePairs = Tuple[Tuple[int, int], ...]
Sequence2D = Union[FeatureTrack, np.ndarray]

# Predecessor codes, in tie-break order
_DIAGONAL, _SOURCE_STEP, _TARGET_STEP = 0, 1, 2

def _distance_matrix(sequence: Sequence2D) -> np.ndarray:
    """Rows used for the alignment distance: static columns of a track, all columns of an array."""
    if isinstance(sequence, FeatureTrack):
        return sequence.data[:, sequence.static_columns()]
    matrix = np.asarray(sequence, dtype=np.float64)
    return matrix.reshape(-1, 1) if matrix.ndim == 1 else matrix

def _band_mask(m: int, n: int, band_width: Optional[int]) -> np.ndarray:
    if band_width is None or m == 1:
        return np.ones((m, n), dtype=bool)
    diagonal = np.arange(m)[:, None] * (n - 1) / (m - 1)
    return np.abs(np.arange(n)[None, :] - diagonal) <= band_width

def dtw_align(source: Sequence2D, target: Sequence2D, config: Optional[DtwConfig] = None) -> WarpingPath:
    """Minimum-cost monotone alignment under steps (1,0), (0,1) and (1,1).

    The local distance is squared Euclidean. Equal-cost predecessors are
    resolved diagonal first, then source advance, then target advance.

    Args:
        source (Sequence2D): m x d frames (a FeatureTrack contributes its static columns).
        target (Sequence2D): n x d frames.
        config (Optional[DtwConfig]): Step set and optional band.

    Returns:
        WarpingPath: Pairs from (0, 0) to (m-1, n-1) and the accumulated cost.

    Raises:
        InputValidationError: On empty sequences, a dimension mismatch or a band leaving no path.
    """
    config = config or DtwConfig()
    x, y = _distance_matrix(source), _distance_matrix(target)
    if len(x) == 0 or len(y) == 0:
        raise InputValidationError("dtw_align needs two non-empty sequences")
    if x.shape[1] != y.shape[1]:
        raise InputValidationError(f"dtw_align dimension mismatch: {x.shape[1]} vs {y.shape[1]}")

    m, n = len(x), len(y)
    local = cdist(x, y, config.distance)
    local[~_band_mask(m, n, config.band_width)] = np.inf

    # acc[i + 1, j + 1] holds the best cost of reaching cell (i, j)
    acc = np.full((m + 1, n + 1), np.inf)
    acc[0, 0] = 0.0
    steps = np.zeros((m, n), dtype=np.int8)
    for d in range(m + n - 1):
        i = np.arange(max(0, d - n + 1), min(d, m - 1) + 1)
        j = d - i
        candidates = np.stack([acc[i, j], acc[i, j + 1], acc[i + 1, j]])
        choice = np.argmin(candidates, axis=0)
        acc[i + 1, j + 1] = local[i, j] + candidates[choice, np.arange(len(i))]
        steps[i, j] = choice

    cost = float(acc[m, n])
    if not np.isfinite(cost):
        raise InputValidationError(f"band_width={config.band_width} leaves no path for a {m}x{n} alignment")

    i, j = m - 1, n - 1
    path = [(i, j)]
    while (i, j) != (0, 0):
        step = steps[i, j]
        if step == _DIAGONAL:
            i, j = i - 1, j - 1
        elif step == _SOURCE_STEP:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return WarpingPath(tuple(path), cost)

def _segments_in_order(pair: UtterancePair) -> List[Tuple[str, Tuple[int, int], Tuple[int, int]]]:
    """Interleaved gaps and phones as (kind, source span, target span)."""
    spans = []
    src_prev, tgt_prev = 0, 0
    for src, tgt in zip(pair.source_phones, pair.target_phones):
        spans.append(("gap", (src_prev, src.start_frame), (tgt_prev, tgt.start_frame)))
        spans.append((src.label, (src.start_frame, src.end_frame), (tgt.start_frame, tgt.end_frame)))
        src_prev, tgt_prev = src.end_frame, tgt.end_frame
    spans.append(("gap", (src_prev, pair.source.n_frames), (tgt_prev, pair.target.n_frames)))
    return spans

def two_stage_align(pair: UtterancePair, config: Optional[DtwConfig] = None) -> UtterancePair:
    """Align each phone pair by DTW and concatenate the offset paths.

    Residual spans outside the phones (leading, trailing and inter-phone
    gaps) are aligned by their own DTW when both sides are non-empty and are
    left unaligned otherwise. With a one-sided leading or trailing gap the
    path therefore does not start at (0, 0) or end at (m-1, n-1); frames in
    such gaps have no partner in the alignment.

    Raises:
        InputValidationError: If the tracks have different dimensionality.
    """
    config = config or DtwConfig()
    if pair.source.dim != pair.target.dim:
        raise InputValidationError(f"{pair.utt_id}: source dim {pair.source.dim} != target dim {pair.target.dim}")

    alignment: List[Tuple[int, int]] = []
    total_cost = 0.0
    skipped = 0
    for kind, (s0, s1), (t0, t1) in _segments_in_order(pair):
        if s1 <= s0 or t1 <= t0:
            skipped += int(kind == "gap" and (s1 > s0 or t1 > t0))
            continue
        warp = dtw_align(pair.source.slice(s0, s1), pair.target.slice(t0, t1), config)
        alignment.extend((s0 + i, t0 + j) for i, j in warp.pairs)
        total_cost += warp.cost

    if skipped:
        logger.debug(f"{pair.utt_id}: {skipped} one-sided gaps left unaligned")
    logger.debug(f"{pair.utt_id}: aligned {len(alignment)} frame pairs, cost {total_cost:.4f}")
    return UtterancePair(
        source=pair.source,
        target=pair.target,
        source_phones=pair.source_phones,
        target_phones=pair.target_phones,
        alignment=tuple(alignment),
        utt_id=pair.utt_id,
    )

def alignment_cost(pair: UtterancePair) -> float:
    """Accumulated squared-Euclidean static-feature distance along the stored path."""
    src_rows, tgt_rows = _path_indices(pair)
    x = pair.source.data[:, pair.source.static_columns()][src_rows]
    y = pair.target.data[:, pair.target.static_columns()][tgt_rows]
    return float(np.sum((x - y) ** 2))

def _path_indices(pair: UtterancePair) -> Tuple[np.ndarray, np.ndarray]:
    if pair.alignment is None:
        raise AlignmentStateError(f"utterance '{pair.utt_id}' has no alignment; run two_stage_align first")
    path = np.asarray(pair.alignment, dtype=int).reshape(-1, 2)
    return path[:, 0], path[:, 1]

def paired_frames(pair: UtterancePair) -> Tuple[np.ndarray, np.ndarray]:
    """Source and target rows gathered along the alignment path.

    Raises:
        AlignmentStateError: If the pair carries no alignment.
    """
    src_rows, tgt_rows = _path_indices(pair)
    return pair.source.data[src_rows], pair.target.data[tgt_rows]

def stack_pairs(pairs: Sequence[UtterancePair]) -> Tuple[np.ndarray, np.ndarray]:
    """paired_frames over many utterances, concatenated in order."""
    if not pairs:
        raise InputValidationError("no utterance pairs to stack")
    sources, targets = zip(*(paired_frames(pair) for pair in pairs))
    return np.vstack(sources), np.vstack(targets)

def write_alignment(path: Union[str, Path], pairs: Sequence[Tuple[int, int]]) -> None:
    """Text export, one `src_frame tgt_frame` pair per line."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(f"{i} {j}\n" for i, j in pairs), encoding="utf-8")

def read_alignment(path: Union[str, Path]) -> FramePairs:
    """Read a file written by write_alignment.

    Raises:
        FeatureFormatError: On malformed lines.
    """
    pairs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2:
            raise FeatureFormatError(f"{path}:{lineno}: expected 'src_frame tgt_frame'")
        try:
            pairs.append((int(fields[0]), int(fields[1])))
        except ValueError as e:
            raise FeatureFormatError(f"{path}:{lineno}: {e}") from e
    return tuple(pairs)
