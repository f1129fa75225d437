#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/synthetic.py
Created: 2026-09-10 15:21:08 UTC

Description:
    Seeded parallel corpus generator. A "source speaker" is rendered from
    formant templates; the "target speaker" is the same utterance passed
    through a known frequency warp and gain, an affine-plus-shape F0 map
    and per-phone time scaling. Because the mapping is known, the corpus
    serves as an oracle for end-to-end checks.
'''

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.interpolate import interp1d
from scipy.ndimage import uniform_filter1d

from config import AnalysisConfig, SyntheticConfig
from vcforge import featio
from vcforge.analysis import synthesize
from vcforge.domain.domain import FeatureTrack, PhoneSegment, PhoneSegmentList
from vcforge.exceptions import InputValidationError
from vcforge.prosody import apply_duration, voiced_runs

# Get a logger for this module
logger = logging.getLogger(__name__)

SILENCE = "sil"
_BASE_LEVEL = -5.5
_SILENCE_LEVEL = -9.0
_SMOOTHING_FRAMES = 5

class PhoneTemplate(NamedTuple):
    label: str
    voiced: bool
    envelope: np.ndarray

class SyntheticCorpus(NamedTuple):
    """Files and split of a generated corpus."""
    manifest: Path
    config_file: Path
    train_ids: List[str]
    test_ids: List[str]

def _bin_frequencies(config: AnalysisConfig) -> np.ndarray:
    return np.arange(config.envelope_order) * config.sample_rate / config.fft_size

def make_phone_inventory(config: SyntheticConfig, analysis: AnalysisConfig, rng: np.random.Generator) -> List[PhoneTemplate]:
    """Log-envelope templates: Gaussian formant bumps over a spectral tilt.

    Voiced phones get three formants below 4 kHz; unvoiced phones get
    broad high-frequency energy.
    """
    freqs = _bin_frequencies(analysis)
    nyquist = analysis.sample_rate / 2
    n_unvoiced = min(int(round(config.phone_inventory * config.unvoiced_fraction)), config.phone_inventory - 1)
    inventory = []
    for index in range(config.phone_inventory):
        voiced = index >= n_unvoiced
        if voiced:
            tilt = -1.5 * freqs / nyquist
            centres = np.sort(rng.uniform([250, 900, 2000], [850, 1900, min(3600, 0.9 * nyquist)]))
            widths = rng.uniform(120, 300, size=3)
            heights = rng.uniform([2.5, 2.0, 1.5], [3.2, 2.8, 2.2])
        else:
            tilt = 1.0 * freqs / nyquist - 1.0
            centres = rng.uniform(0.45 * nyquist, 0.85 * nyquist, size=2)
            widths = rng.uniform(0.08 * nyquist, 0.15 * nyquist, size=2)
            heights = rng.uniform(1.0, 2.0, size=2)
        bumps = heights[:, None] * np.exp(-0.5 * ((freqs[None, :] - centres[:, None]) / widths[:, None]) ** 2)
        inventory.append(PhoneTemplate(f"p{index}", voiced, _BASE_LEVEL + tilt + bumps.sum(axis=0)))
    return inventory

def _utterance_plan(config: SyntheticConfig, inventory: List[PhoneTemplate], frame_shift_s: float,
                    rng: np.random.Generator) -> List[Tuple[Optional[PhoneTemplate], int]]:
    low, high = config.phones_per_utterance
    n_phones = int(rng.integers(low, high + 1))
    silence_frames = int(round(config.silence_s / frame_shift_s))
    plan: List[Tuple[Optional[PhoneTemplate], int]] = []
    if silence_frames:
        plan.append((None, silence_frames))
    for index in rng.integers(0, len(inventory), size=n_phones):
        length = max(2, int(round(rng.uniform(*config.phone_duration_s) / frame_shift_s)))
        plan.append((inventory[index], length))
    if silence_frames:
        plan.append((None, silence_frames))
    return plan

def _source_tracks(plan: List[Tuple[Optional[PhoneTemplate], int]], analysis: AnalysisConfig,
                   rng: np.random.Generator) -> Tuple[FeatureTrack, FeatureTrack, PhoneSegmentList]:
    shift = analysis.frame_shift_s
    order = analysis.envelope_order
    envelope_rows, voiced_rows, phones = [], [], []
    cursor = 0
    for template, length in plan:
        if template is None:
            envelope_rows.append(np.full((length, order), _SILENCE_LEVEL))
            voiced_rows.append(np.zeros(length))
            label = SILENCE
        else:
            jitter = rng.normal(0.0, 0.05, size=(length, 1))
            envelope_rows.append(template.envelope[None, :] + jitter)
            voiced_rows.append(np.full(length, float(template.voiced)))
            label = template.label
        phones.append(PhoneSegment(label, cursor, cursor + length))
        cursor += length

    envelope = uniform_filter1d(np.vstack(envelope_rows), size=_SMOOTHING_FRAMES, axis=0, mode="nearest")
    vuv = np.concatenate(voiced_rows)
    base = rng.uniform(95.0, 135.0)
    declination = base * (1.0 - 0.15 * np.arange(cursor) / max(cursor - 1, 1))
    f0 = np.where(vuv > 0.5, declination, 0.0)
    return (FeatureTrack(envelope, shift, ("logsp",) * order),
            FeatureTrack(np.column_stack([f0, vuv]), shift, ("f0", "vuv")),
            PhoneSegmentList(tuple(phones)))

def warp_envelope(envelope: np.ndarray, warp: float, gain_db: float) -> np.ndarray:
    """Stretch the frequency axis by `warp` (formants move up for warp > 1) and add a gain."""
    bins = np.arange(envelope.shape[1])
    sources = np.clip(bins / warp, 0, envelope.shape[1] - 1)
    warped = interp1d(bins, envelope, axis=1)(sources)
    return warped + gain_db / 20.0 * np.log(10.0)

def map_f0(f0vuv: np.ndarray, config: SyntheticConfig) -> np.ndarray:
    """Affine F0 map plus a half-sine rise and fall over every voiced run."""
    data = f0vuv.copy()
    for start, end in voiced_runs(data[:, 1], min_length=1):
        u = np.linspace(0.0, 1.0, end - start)
        data[start:end, 0] = (config.f0_scale * data[start:end, 0] + config.f0_offset_hz
                              + config.f0_shape_hz * np.sin(np.pi * u))
    return data

def _target_tracks(envelope: FeatureTrack, f0vuv: FeatureTrack, phones: PhoneSegmentList,
                   config: SyntheticConfig, rng: np.random.Generator) -> Tuple[FeatureTrack, FeatureTrack, PhoneSegmentList]:
    factors = [1.0 if phone.label == SILENCE else rng.uniform(*config.duration_scale) for phone in phones]
    (envelope, f0vuv), retimed = apply_duration([envelope, f0vuv], phones, [1.0 / f for f in factors])
    envelope = envelope.with_data(warp_envelope(envelope.data, config.spectral_warp, config.gain_db))
    return envelope, f0vuv.with_data(map_f0(f0vuv.data, config)), retimed

def _toml_value(value: Any) -> str:
    """TOML text of a string, finite number, boolean or a list of those.

    These are the types whose JSON spelling is also valid TOML.
    """
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(item) for item in value) + "]"
    if not isinstance(value, (str, int, float, bool)) or (isinstance(value, float) and not np.isfinite(value)):
        raise InputValidationError(f"{value!r} has no shared JSON/TOML form")
    return json.dumps(value, ensure_ascii=False).replace("\x7f", "\\u007f")

def _toml_document(document: Dict[str, Any]) -> str:
    """Top-level keys first, then one [table] per nested dict."""
    lines = [f"{key} = {_toml_value(value)}" for key, value in document.items() if not isinstance(value, dict)]
    for table, values in document.items():
        if isinstance(values, dict):
            lines += ["", f"[{table}]", *(f"{key} = {_toml_value(value)}" for key, value in values.items())]
    return "\n".join(lines) + "\n"

def make_synthetic_corpus(out_dir: Union[str, Path], config: SyntheticConfig,
                          analysis: AnalysisConfig) -> SyntheticCorpus:
    """Render n_train + n_test parallel utterances with labels, a manifest and a config file.

    The first n_train ids form the training split. corpus.toml holds the
    manifest path, the split and the analysis settings, ready for --config.
    """
    out_dir = Path(out_dir).resolve()
    wav_dir = out_dir / "wav"
    lab_dir = out_dir / "lab"
    rng = np.random.default_rng(config.seed)
    inventory = make_phone_inventory(config, analysis, rng)
    shift = analysis.frame_shift_s

    ids = [f"utt{index:04d}" for index in range(config.n_train + config.n_test)]
    manifest_lines = []
    for utt_id in ids:
        plan = _utterance_plan(config, inventory, shift, rng)
        envelope, f0vuv, phones = _source_tracks(plan, analysis, rng)
        tgt_envelope, tgt_f0vuv, tgt_phones = _target_tracks(envelope, f0vuv, phones, config, rng)
        noise_seed = int(rng.integers(0, 2 ** 31))
        for side, env, f0, labels in (("src", envelope, f0vuv, phones), ("tgt", tgt_envelope, tgt_f0vuv, tgt_phones)):
            featio.write_wav(wav_dir / f"{utt_id}.{side}.wav", synthesize(env, f0, analysis, seed=noise_seed))
            featio.write_phone_labels(lab_dir / f"{utt_id}.{side}.lab", labels, shift)
        manifest_lines.append(f"{utt_id} wav/{utt_id}.src.wav lab/{utt_id}.src.lab "
                              f"wav/{utt_id}.tgt.wav lab/{utt_id}.tgt.lab")

    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    train_ids, test_ids = ids[:config.n_train], ids[config.n_train:]
    document = {
        "manifest": str(manifest),
        "train_ids": train_ids,
        "test_ids": test_ids,
        "analysis": analysis.model_dump(include={"sample_rate", "fft_size", "frame_shift_s"}),
    }
    config_file = out_dir / "corpus.toml"
    config_file.write_text(_toml_document(document), encoding="utf-8")
    logger.info(f"Wrote synthetic corpus of {len(ids)} utterances to {out_dir}")
    return SyntheticCorpus(manifest, config_file, train_ids, test_ids)
