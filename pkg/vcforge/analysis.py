#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/analysis.py
Created: 2026-09-03 09:12:26 UTC

Description:
    Simplified speech analyzer/synthesizer: cepstrally smoothed log
    spectral envelope, normalized-autocorrelation F0 with voicing decision,
    log RMS intensity, delta features, and pulse/noise overlap-add
    resynthesis from converted features.
'''

import logging
from typing import NamedTuple

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import interp1d
from scipy.signal import get_window
from scipy.special import logsumexp

from config import AnalysisConfig
from vcforge.domain.domain import Audio, FeatureTrack
from vcforge.exceptions import InputValidationError

# Get a logger for this module
logger = logging.getLogger(__name__)

# Frames below this mean-square power are treated as silent
_SILENCE_POWER = 1e-12
# A later NCCF peak must reach this fraction of the global maximum to win
_OCTAVE_TOLERANCE = 0.9

class AnalysisResult(NamedTuple):
    envelope: FeatureTrack
    f0vuv: FeatureTrack
    intensity: FeatureTrack

def _check_audio(audio: Audio, config: AnalysisConfig) -> None:
    if audio.sample_rate != config.sample_rate:
        raise InputValidationError(
            f"audio sample rate {audio.sample_rate} Hz does not match configured {config.sample_rate} Hz")
    if len(audio.samples) < config.fft_size:
        raise InputValidationError(
            f"audio of {len(audio.samples)} samples is shorter than one {config.fft_size}-sample window")

def frame_count(n_samples: int, config: AnalysisConfig) -> int:
    """Number of centered frames for a signal of n_samples."""
    return 1 + n_samples // config.hop_samples

def frame_signal(samples: np.ndarray, config: AnalysisConfig) -> np.ndarray:
    """Centered, zero-padded frames of fft_size samples every hop, shape (frames, fft_size)."""
    half = config.fft_size // 2
    padded = np.pad(np.asarray(samples, dtype=np.float64), (half, half))
    starts = np.arange(frame_count(len(samples), config)) * config.hop_samples
    return padded[starts[:, None] + np.arange(config.fft_size)[None, :]]

def analysis_window(config: AnalysisConfig) -> np.ndarray:
    return get_window("hann", config.fft_size)

def extract_envelope(audio: Audio, config: AnalysisConfig) -> FeatureTrack:
    """Natural-log magnitude envelope, one row of envelope_order bins per frame.

    The Hann-windowed magnitude spectrum is floored, taken to the log domain,
    liftered to the first cepstral_lifter_order quefrencies and transformed
    back. Values never fall below config.log_floor.

    Raises:
        InputValidationError: If the audio is shorter than one window.
    """
    _check_audio(audio, config)
    n_fft = config.fft_size
    frames = frame_signal(audio.samples, config) * analysis_window(config)
    magnitude = np.abs(sfft.rfft(frames, axis=1))
    log_magnitude = np.log(np.maximum(magnitude, np.exp(config.log_floor)))

    cepstrum = sfft.irfft(log_magnitude, n=n_fft, axis=1)
    order = config.cepstral_lifter_order
    lifter = np.zeros(n_fft)
    lifter[:order] = 1.0
    lifter[n_fft - order + 1:] = 1.0 # mirrored quefrencies keep the cepstrum even
    smoothed = sfft.rfft(cepstrum * lifter, axis=1).real[:, :config.envelope_order]

    envelope = np.maximum(smoothed, config.log_floor)
    logger.debug(f"Extracted envelope: {envelope.shape[0]} frames x {envelope.shape[1]} bins")
    return FeatureTrack(envelope, config.frame_shift_s, ("logsp",) * config.envelope_order)

def _nccf(frames: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation of each frame with itself at every lag."""
    n = frames.shape[1]
    spectrum = sfft.rfft(frames, n=2 * n, axis=1)
    acf = sfft.irfft(np.abs(spectrum) ** 2, n=2 * n, axis=1)[:, :n]
    cumulative = np.concatenate([np.zeros((frames.shape[0], 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    lags = np.arange(n)
    head = cumulative[:, n - lags]
    tail = cumulative[:, n][:, None] - cumulative[:, lags]
    denominator = np.sqrt(np.maximum(head * tail, 0.0))
    out = np.zeros_like(acf)
    np.divide(acf, denominator, out=out, where=denominator > _SILENCE_POWER)
    return out

def extract_f0(audio: Audio, config: AnalysisConfig) -> FeatureTrack:
    """F0 in Hz and a 0/1 voicing flag per frame.

    The shortest-lag NCCF peak within the F0 search range that reaches
    _OCTAVE_TOLERANCE of the best peak is refined by parabolic
    interpolation; frames whose best peak is below voicing_threshold are
    unvoiced and get f0 = 0 exactly.
    """
    _check_audio(audio, config)
    sr = config.sample_rate
    lag_min = max(2, int(np.floor(sr / config.f0_ceil_hz)))
    lag_max = int(np.ceil(sr / config.f0_floor_hz))
    if lag_max >= config.fft_size - 1:
        raise InputValidationError(
            f"f0_floor_hz={config.f0_floor_hz} needs lags up to {lag_max}, beyond the {config.fft_size}-sample frame")

    frames = frame_signal(audio.samples, config)
    nccf = _nccf(frames)
    power = np.mean(frames ** 2, axis=1)

    result = np.zeros((frames.shape[0], 2))
    for t in range(frames.shape[0]):
        if power[t] < _SILENCE_POWER:
            continue
        r = nccf[t]
        lags = np.arange(lag_min, lag_max + 1)
        peaks = lags[(r[lags] > r[lags - 1]) & (r[lags] >= r[lags + 1])]
        if len(peaks) == 0:
            continue
        best = r[peaks].max()
        if best < config.voicing_threshold:
            continue
        lag = peaks[np.argmax(r[peaks] >= _OCTAVE_TOLERANCE * best)]

        left, centre, right = r[lag - 1], r[lag], r[lag + 1]
        curvature = left - 2 * centre + right
        shift = 0.5 * (left - right) / curvature if curvature < 0 else 0.0
        f0 = sr / (lag + float(np.clip(shift, -0.5, 0.5)))
        result[t] = (float(np.clip(f0, config.f0_floor_hz, config.f0_ceil_hz)), 1.0)

    voiced = int(result[:, 1].sum())
    logger.debug(f"Extracted F0: {voiced}/{len(result)} voiced frames")
    return FeatureTrack(result, config.frame_shift_s, ("f0", "vuv"))

def extract_intensity(audio: Audio, config: AnalysisConfig) -> FeatureTrack:
    """Per-frame log RMS of the Hann-windowed signal, corrected for window power."""
    _check_audio(audio, config)
    window = analysis_window(config)
    frames = frame_signal(audio.samples, config) * window
    mean_square = np.sum(frames ** 2, axis=1) / np.sum(window ** 2)
    floor_power = np.exp(2 * config.log_floor)
    safe = np.maximum(mean_square, floor_power)
    log_rms = np.where(mean_square > floor_power, 0.5 * np.log(safe), config.log_floor)
    return FeatureTrack(log_rms.reshape(-1, 1), config.frame_shift_s, ("intensity",))

def analyze(audio: Audio, config: AnalysisConfig) -> AnalysisResult:
    """Envelope, F0/VUV and intensity tracks of one recording."""
    return AnalysisResult(
        envelope=extract_envelope(audio, config),
        f0vuv=extract_f0(audio, config),
        intensity=extract_intensity(audio, config),
    )

def append_deltas(track: FeatureTrack) -> FeatureTrack:
    """Static, delta and delta-delta features with edge frames replicated.

    delta[t] = (x[t+1] - x[t-1]) / 2, deltadelta[t] = x[t+1] - 2x[t] + x[t-1].
    """
    if track.n_frames < 1:
        raise InputValidationError("append_deltas needs at least one frame")
    x = track.data
    padded = np.pad(x, ((1, 1), (0, 0)), mode="edge")
    delta = (padded[2:] - padded[:-2]) / 2.0
    delta_delta = padded[2:] - 2.0 * padded[1:-1] + padded[:-2]
    static_labels = track.dim_labels or ("static",) * track.dim
    labels = tuple(static_labels) + ("delta",) * track.dim + ("deltadelta",) * track.dim
    return FeatureTrack(np.hstack([x, delta, delta_delta]), track.frame_shift_s, labels)

def envelope_log_rms(envelope: np.ndarray, config: AnalysisConfig) -> np.ndarray:
    """Log RMS implied by log-magnitude envelope rows through Parseval's relation.

    Shifting a row by d shifts its implied log RMS by exactly d.
    """
    envelope = np.atleast_2d(envelope)
    weights = np.full(envelope.shape[1], 2.0)
    weights[0] = 1.0 # DC bin is not mirrored
    window = analysis_window(config)
    log_energy = logsumexp(2.0 * envelope, b=weights, axis=1) - np.log(config.fft_size)
    return 0.5 * (log_energy - np.log(np.sum(window ** 2)))

def envelope_to_cepstrum(track: FeatureTrack, n_coefficients: int) -> FeatureTrack:
    """First n orthonormal DCT-II coefficients of each static envelope row."""
    static = track.data[:, track.static_columns()]
    if n_coefficients > static.shape[1]:
        raise InputValidationError(f"{n_coefficients} coefficients requested from {static.shape[1]} bins")
    coefficients = sfft.dct(static, type=2, norm="ortho", axis=1)[:, :n_coefficients]
    return FeatureTrack(coefficients, track.frame_shift_s, ("cep",) * n_coefficients)

def cepstrum_to_envelope(track: FeatureTrack, envelope_order: int) -> FeatureTrack:
    """Inverse of envelope_to_cepstrum with the missing coefficients set to zero."""
    if track.dim > envelope_order:
        raise InputValidationError(f"{track.dim} coefficients exceed envelope order {envelope_order}")
    padded = np.zeros((track.n_frames, envelope_order))
    padded[:, :track.dim] = track.data
    envelope = sfft.idct(padded, type=2, norm="ortho", axis=1)
    return FeatureTrack(envelope, track.frame_shift_s, ("logsp",) * envelope_order)

def downsample_envelope(track: FeatureTrack, factor: int = 2) -> FeatureTrack:
    """Average groups of `factor` adjacent bins of the static envelope."""
    static = track.data[:, track.static_columns()]
    if static.shape[1] % factor:
        raise InputValidationError(f"{static.shape[1]} bins not divisible by {factor}")
    reduced = static.reshape(track.n_frames, -1, factor).mean(axis=2)
    return FeatureTrack(reduced, track.frame_shift_s, ("logsp",) * reduced.shape[1])

def upsample_envelope(track: FeatureTrack, envelope_order: int) -> FeatureTrack:
    """Linear re-interpolation of a bin-averaged envelope to envelope_order bins."""
    factor = envelope_order / track.dim
    centres = np.arange(track.dim) * factor + (factor - 1) / 2
    if track.dim == 1:
        restored = np.repeat(track.data, envelope_order, axis=1)
    else:
        restored = interp1d(centres, track.data, axis=1, fill_value="extrapolate")(np.arange(envelope_order))
    return FeatureTrack(restored, track.frame_shift_s, ("logsp",) * envelope_order)

def synthesize(envelope: FeatureTrack, f0vuv: FeatureTrack, config: AnalysisConfig, seed: int = 0) -> Audio:
    """Pulse/noise excitation shaped by per-frame envelopes, overlap-added.

    Voiced frames are excited by a unit-power pulse train at f0, unvoiced
    frames by unit-variance Gaussian noise. Each Hann-windowed excitation
    frame is filtered by the zero-phase magnitude exp(envelope) and
    weighted-overlap-added. Output is scaled down only if its peak exceeds 1.

    Raises:
        InputValidationError: On empty input, frame count or envelope order mismatch.
    """
    n_frames = envelope.n_frames
    if n_frames == 0:
        raise InputValidationError("cannot synthesize a zero-length envelope")
    if f0vuv.n_frames != n_frames:
        raise InputValidationError(f"envelope has {n_frames} frames but f0/vuv has {f0vuv.n_frames}")
    static = envelope.data[:, envelope.static_columns()]
    if static.shape[1] != config.envelope_order:
        raise InputValidationError(f"envelope has {static.shape[1]} bins, expected {config.envelope_order}")

    sr, hop, n_fft = config.sample_rate, config.hop_samples, config.fft_size
    half = n_fft // 2
    n_samples = (n_frames - 1) * hop + 1
    nearest = np.minimum(np.round(np.arange(n_samples) / hop).astype(int), n_frames - 1)
    f0 = f0vuv.data[nearest, 0]
    voiced = (f0vuv.data[nearest, 1] > 0.5) & (f0 > 0)

    rng = np.random.default_rng(seed)
    phase = np.cumsum(np.where(voiced, f0 / sr, 0.0))
    pulse_at = voiced & (np.floor(phase) > np.floor(np.concatenate([[-1.0], phase[:-1]])))
    excitation = np.where(pulse_at, np.sqrt(sr / np.where(voiced, f0, 1.0)), 0.0)
    excitation = np.where(voiced, excitation, rng.standard_normal(n_samples))

    window = analysis_window(config)
    frames = frame_signal(excitation, config)[:n_frames] * window
    magnitude = np.exp(np.hstack([static, static[:, -1:]])) / np.sqrt(np.sum(window ** 2))
    shaped = sfft.irfft(sfft.rfft(frames, axis=1) * magnitude, n=n_fft, axis=1) * window

    output = np.zeros(n_samples + n_fft)
    weight = np.zeros(n_samples + n_fft)
    positions = (np.arange(n_frames) * hop)[:, None] + np.arange(n_fft)[None, :]
    np.add.at(output, positions, shaped)
    np.add.at(weight, positions, np.broadcast_to(window ** 2, shaped.shape))
    signal = output[half:half + n_samples] / np.maximum(weight[half:half + n_samples], 1e-8)

    peak = np.max(np.abs(signal))
    if peak > 1.0:
        signal = signal / peak
    logger.debug(f"Synthesized {n_samples} samples from {n_frames} frames (peak {peak:.3f})")
    return Audio(signal, sr)
