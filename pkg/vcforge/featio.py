#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/featio.py
Created: 2026-09-02 13:20:44 UTC

Description:
    On-disk formats shared by every module: 16-bit PCM WAV ingestion,
    the binary feature-track format and phone label files.

    Feature file (little-endian):
        magic "VCFT" | version u32 | frames u32 | dims u32 | shift_us u32
        | frames*dims float64 | optional "LBLS" u32 length + utf-8 labels
'''

import logging
import math
import struct
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import ValidationError
from scipy.io import wavfile

from vcforge.domain.domain import Audio, FeatureTrack, PhoneSegment, PhoneSegmentList
from vcforge.exceptions import AudioReadError, FeatureFormatError, InputValidationError
from vcforge.models import PhoneLabelRow

# Get a logger for this module
logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRACK_MAGIC = b"VCFT"
TRACK_VERSION = 1
LABEL_MAGIC = b"LBLS"
_TRACK_HEADER = struct.Struct("<4sIIII")
_U32 = struct.Struct("<I")
_RIFF_CHUNK = struct.Struct("<4sI")
_FMT_BODY = struct.Struct("<HHIIHH")

PCM_SCALE = 32768.0
# Tolerance when converting label times to frame indices
_FRAME_EPS = 1e-9

def to_frames(seconds: float, frame_shift_s: float) -> int:
    """Nearest frame index for a time in seconds."""
    return int(round(seconds / frame_shift_s))

def to_seconds(frames: int, frame_shift_s: float) -> float:
    """Start time in seconds of a frame index."""
    return frames * frame_shift_s

"""=========================== AUDIO ==========================="""
def read_wav(path: PathLike) -> Audio:
    """Read a 16-bit PCM mono WAV file.

    Args:
        path (PathLike): WAV file path.

    Returns:
        Audio: Samples scaled by 1/32768 into [-1, 1) with the file's sample rate.

    Raises:
        FeatureFormatError: If the file is not RIFF/WAVE, not PCM, not 16-bit or not mono.
        AudioReadError: If the file cannot be read or a chunk is truncated.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        error_msg = f"Cannot read WAV file {path}: {e}"
        logger.error(error_msg)
        raise AudioReadError(error_msg) from e

    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FeatureFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    offset = 12
    while offset + _RIFF_CHUNK.size <= len(raw):
        chunk_id, size = _RIFF_CHUNK.unpack_from(raw, offset)
        offset += _RIFF_CHUNK.size
        body = raw[offset:offset + size]
        if len(body) < size:
            raise AudioReadError(f"{path}: truncated '{chunk_id.decode('latin-1')}' chunk "
                                 f"(declared {size} bytes, found {len(body)})")
        if chunk_id == b"fmt ":
            if size < _FMT_BODY.size:
                raise FeatureFormatError(f"{path}: fmt chunk too short")
            fmt = _FMT_BODY.unpack_from(body)
        elif chunk_id == b"data":
            data = body
        offset += size + (size & 1) # chunks are word aligned

    if fmt is None or data is None:
        raise FeatureFormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1 or bits != 16:
        raise FeatureFormatError(f"{path}: unsupported encoding (format={audio_format}, bits={bits}); "
                                 "only 16-bit PCM is supported")
    if channels != 1:
        raise FeatureFormatError(f"{path}: {channels} channels; only mono is supported")
    if len(data) % 2:
        raise AudioReadError(f"{path}: data chunk ends mid-sample")

    audio = Audio(np.frombuffer(data, dtype="<i2").astype(np.float64) / PCM_SCALE, sample_rate)
    logger.debug(f"Read {audio.duration_s:.2f} s at {sample_rate} Hz from {path}")
    return audio

def write_wav(path: PathLike, audio: Audio) -> None:
    """Write audio as 16-bit PCM mono, clipping to the representable range."""
    pcm = np.clip(np.round(audio.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), audio.sample_rate, pcm)
    logger.debug(f"Wrote {len(pcm)} samples to {path}")

"""=========================== FEATURE TRACKS ==========================="""
def write_track(track: FeatureTrack, path: PathLike) -> None:
    """Serialize a FeatureTrack.

    The frame shift is stored in whole microseconds.

    Raises:
        InputValidationError: If the frame shift is not representable.
    """
    shift_us = int(round(track.frame_shift_s * 1e6))
    if not 0 < shift_us < 2 ** 32:
        raise InputValidationError(f"frame shift {track.frame_shift_s}s not representable in microseconds")

    parts = [
        _TRACK_HEADER.pack(TRACK_MAGIC, TRACK_VERSION, track.n_frames, track.dim, shift_us),
        track.data.astype("<f8").tobytes(),
    ]
    if track.dim_labels is not None:
        encoded = "\n".join(track.dim_labels).encode("utf-8")
        parts += [LABEL_MAGIC, _U32.pack(len(encoded)), encoded]

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(b"".join(parts))
    logger.debug(f"Wrote track {track.n_frames}x{track.dim} to {path}")

def read_track(path: PathLike) -> FeatureTrack:
    """Deserialize a FeatureTrack written by write_track.

    Raises:
        FeatureFormatError: On magic/version mismatch or inconsistent counts.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise FeatureFormatError(f"Cannot read feature file {path}: {e}") from e

    if len(raw) < _TRACK_HEADER.size:
        raise FeatureFormatError(f"{path}: file shorter than header")
    magic, version, n_frames, dim, shift_us = _TRACK_HEADER.unpack_from(raw)
    if magic != TRACK_MAGIC:
        raise FeatureFormatError(f"{path}: bad magic {magic!r}, expected {TRACK_MAGIC!r}")
    if version != TRACK_VERSION:
        raise FeatureFormatError(f"{path}: unsupported version {version}")
    if dim < 1 or shift_us == 0:
        raise FeatureFormatError(f"{path}: invalid header (dims={dim}, shift_us={shift_us})")

    offset = _TRACK_HEADER.size
    n_bytes = n_frames * dim * 8
    available = len(raw) - offset
    if available < n_bytes:
        raise FeatureFormatError(f"{path}: header declares {n_frames} frames but data holds "
                                 f"{available // (dim * 8)}")
    data = np.frombuffer(raw, dtype="<f8", count=n_frames * dim, offset=offset).reshape(n_frames, dim)
    offset += n_bytes

    labels = None
    if offset < len(raw):
        if raw[offset:offset + 4] != LABEL_MAGIC or offset + 8 > len(raw):
            raise FeatureFormatError(f"{path}: unexpected trailing bytes after frame data")
        (length,) = _U32.unpack_from(raw, offset + 4)
        encoded = raw[offset + 8:offset + 8 + length]
        if len(encoded) != length or offset + 8 + length != len(raw):
            raise FeatureFormatError(f"{path}: corrupt label section")
        labels = tuple(encoded.decode("utf-8").split("\n"))
        if len(labels) != dim:
            raise FeatureFormatError(f"{path}: {len(labels)} labels for {dim} dims")

    try:
        return FeatureTrack(data, shift_us / 1e6, labels)
    except InputValidationError as e:
        raise FeatureFormatError(f"{path}: {e}") from e

def export_track_text(track: FeatureTrack, path: PathLike) -> None:
    """Plain-text dump of a track for debugging."""
    header = f"frame_shift_s={track.frame_shift_s}"
    if track.dim_labels:
        header += " labels=" + ",".join(track.dim_labels)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, track.data, fmt="%.17g", header=header)

"""=========================== PHONE LABELS ==========================="""
def read_phone_labels(path: PathLike, frame_shift_s: float) -> PhoneSegmentList:
    """Read a `start_s end_s label` file into frame-indexed phone segments.

    Start times are floored and end times ceiled to frame indices. A start
    that lands before the previous end only because of that rounding is
    moved to the previous end. A phone left with no frame after that is
    rejected rather than dropped.

    Raises:
        InputValidationError: On malformed lines, reversed or overlapping
            segments, or a phone too short for the frame grid.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputValidationError(f"Cannot read label file {path}: {e}") from e

    entries: List[PhoneSegment] = []
    previous_end_s = 0.0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise InputValidationError(f"{path}:{lineno}: expected 'start end label'")
        try:
            row = PhoneLabelRow(start_s=parts[0], end_s=parts[1], label=" ".join(parts[2:]))
        except ValidationError as e:
            raise InputValidationError(f"{path}:{lineno}: {e.errors()[0]['msg']}") from e
        if entries and row.start_s < previous_end_s:
            raise InputValidationError(f"{path}:{lineno}: segment starts before the previous one ends")

        start = math.floor(row.start_s / frame_shift_s + _FRAME_EPS)
        end = math.ceil(row.end_s / frame_shift_s - _FRAME_EPS)
        if entries and start < entries[-1].end_frame:
            start = entries[-1].end_frame
        if start >= end:
            raise InputValidationError(
                f"{path}:{lineno}: phone '{row.label}' covers no frame at a {frame_shift_s * 1000:g} ms frame shift")
        entries.append(PhoneSegment(row.label, start, end))
        previous_end_s = row.end_s

    logger.debug(f"Read {len(entries)} phone segments from {path}")
    return PhoneSegmentList(tuple(entries))

def write_phone_labels(path: PathLike, phones: PhoneSegmentList, frame_shift_s: float) -> None:
    """Write phone segments as `start_s end_s label` lines."""
    lines = [
        f"{to_seconds(entry.start_frame, frame_shift_s):.6f} "
        f"{to_seconds(entry.end_frame, frame_shift_s):.6f} {entry.label}"
        for entry in phones
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
