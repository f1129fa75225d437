#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
vcforge - Voice Conversion Toolkit
File: tests/conftest.py
Created: 2026-09-12 10:14:36 UTC

Description:
    Shared fixtures: small analysis settings, test signals and tiny
    synthetic experiments that keep the pipeline tests fast.
'''

import os
import sys

import numpy as np
import pytest

# Add parent directory to Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from config import AnalysisConfig, ExperimentConfig, NetConfig, SyntheticConfig, TrainConfig
from vcforge.domain.domain import Audio

@pytest.fixture
def analysis_config() -> AnalysisConfig:
    """16 kHz with a 1024-point frame, the default analysis."""
    return AnalysisConfig()

@pytest.fixture
def small_analysis() -> AnalysisConfig:
    """8 kHz, 256-point frames: 128 envelope bins."""
    return AnalysisConfig(sample_rate=8000, fft_size=256, frame_shift_s=0.005)

def sawtooth(f0: float, seconds: float, sample_rate: int, amplitude: float = 0.5) -> Audio:
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return Audio(amplitude * (2.0 * ((t * f0) % 1.0) - 1.0), sample_rate)

@pytest.fixture
def sawtooth_200hz(analysis_config: AnalysisConfig) -> Audio:
    return sawtooth(200.0, 0.5, analysis_config.sample_rate)

def _small_net(hidden, epochs: int) -> NetConfig:
    train = TrainConfig(learning_rate=0.01, momentum=0.3, batch_size=64, max_epochs=epochs)
    return NetConfig(hidden_sizes=hidden, finetune=train,
                     pretrain=train.model_copy(update={"l1_lambda": 1e-4}), dlp_stage_epochs=2)

def small_experiment(tmp_path, n_train: int = 4, n_test: int = 2, seed: int = 0, **overrides) -> ExperimentConfig:
    """Experiment on a freshly rendered tiny synthetic corpus under tmp_path."""
    from vcforge.synthetic import make_synthetic_corpus

    analysis = AnalysisConfig(sample_rate=8000, fft_size=256, frame_shift_s=0.005)
    synthetic = SyntheticConfig(n_train=n_train, n_test=n_test, phones_per_utterance=(3, 4),
                                phone_inventory=4, seed=seed)
    corpus = make_synthetic_corpus(tmp_path / "corpus", synthetic, analysis)
    settings = dict(
        manifest=corpus.manifest,
        train_ids=corpus.train_ids,
        test_ids=corpus.test_ids,
        workdir=tmp_path / "run",
        seed=seed,
        analysis=analysis,
        synthetic=synthetic,
        gmm={"n_components": 2, "max_iter": 10, "n_coefficients": 12},
        spectrum=_small_net([16, 16], 3),
        spectrum256=_small_net([16], 3),
        mcep=_small_net([8], 3),
        f0_frame=_small_net([8], 3),
        prosody={"segment_length": 8, "duration_frames": 3,
                 "net": _small_net([8], 3), "duration_net": _small_net([4], 3)},
    )
    settings.update(overrides)
    return ExperimentConfig(**settings)

@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    """Keep VCFORGE_* variables and .env files of the developer out of the tests."""
    for key in list(os.environ):
        if key.startswith("VCFORGE_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)

@pytest.fixture
def make_experiment(tmp_path):
    """Factory for small_experiment bound to this test's tmp_path."""
    def factory(**kwargs) -> ExperimentConfig:
        return small_experiment(tmp_path, **kwargs)
    return factory
