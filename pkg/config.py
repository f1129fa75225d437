#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: config.py
Created: 2026-09-02 11:02:40 UTC

Description:
    Configuration settings for vcforge using Pydantic for type validation
    and pydantic-settings for environment variable and TOML file management.
'''

import hashlib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

from pydantic import BaseModel, Field, ValidationError, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from vcforge.exceptions import ConfigError

"""
BaseModel:
    Per-module hyperparameters; invariants enforced by validators.
BaseSettings:
    1. Keyword overrides (CLI) win over environment variables
    2. Environment variables (VCFORGE_ prefix, .env support) win over the TOML file
    3. TOML file ("key = value" with sections) wins over defaults
"""

class SystemId(str, Enum):
    """Conversion systems that cmd_train knows how to build."""
    JD_GMM = "JD-GMM"
    DNN_MCEP = "DNN-MCEP-like"
    DNN_SP_RANDOM = "DNN-SP-random"
    DNN_SP_DLP = "DNN-SP-DLP"
    DNN_SP_AUTOENCODER = "DNN-SP-Autoencoder"
    DNN_SP256_DLP = "DNN-SP256-DLP"
    F0_MEANVAR = "F0-MeanVar"
    F0_DNN_FRAME = "F0-DNN-Frame"
    F0_DNN_SEGMENT = "F0-DNN-Segment"
    INTENSITY_DNN_SEGMENT = "Intensity-DNN-Segment"
    DURATION_DNN = "Duration-DNN"

SPECTRAL_SYSTEMS = frozenset({
    SystemId.JD_GMM, SystemId.DNN_MCEP, SystemId.DNN_SP_RANDOM,
    SystemId.DNN_SP_DLP, SystemId.DNN_SP_AUTOENCODER, SystemId.DNN_SP256_DLP,
})
F0_SYSTEMS = frozenset({SystemId.F0_MEANVAR, SystemId.F0_DNN_FRAME, SystemId.F0_DNN_SEGMENT})

# Full-size hidden layers per network kind, selected with `preset`
PRESET_HIDDEN_SIZES: Dict[str, List[int]] = {
    "spectrum": [3000, 3000, 3000],
    "spectrum256": [1600, 1600],
    "mcep": [50, 50],
    "prosody": [500, 500],
    "f0-frame": [1600, 1600],
}

class AnalysisConfig(BaseModel):
    """Framing and feature extraction parameters.

    envelope_order defaults to fft_size/2 and must equal it when given.
    """
    sample_rate: int = Field(16000, gt=0)
    fft_size: int = Field(1024, ge=16)
    frame_shift_s: float = Field(0.005, gt=0)
    envelope_order: Optional[int] = None
    f0_floor_hz: float = Field(60.0, gt=0)
    f0_ceil_hz: float = Field(400.0, gt=0)
    cepstral_lifter_order: int = Field(40, ge=1)
    voicing_threshold: float = Field(0.3, gt=0, lt=1)
    log_floor: float = -20.0

    @model_validator(mode="before")
    @classmethod
    def _default_envelope_order(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("envelope_order") is None:
            data = {**data, "envelope_order": int(data.get("fft_size", 1024)) // 2}
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> "AnalysisConfig":
        if self.fft_size % 2:
            raise ValueError("fft_size must be even")
        if self.envelope_order != self.fft_size // 2:
            raise ValueError(f"envelope_order must equal fft_size/2 ({self.fft_size // 2})")
        if not 0 < self.f0_floor_hz < self.f0_ceil_hz < self.sample_rate / 2:
            raise ValueError("require 0 < f0_floor_hz < f0_ceil_hz < sample_rate/2")
        if self.cepstral_lifter_order > self.fft_size // 2:
            raise ValueError("cepstral_lifter_order cannot exceed fft_size/2")
        return self

    @property
    def hop_samples(self) -> int:
        return int(round(self.frame_shift_s * self.sample_rate))

class DtwConfig(BaseModel):
    """Dynamic time warping settings. Only the symmetric three-step set is supported."""
    local_steps: Tuple[Tuple[int, int], ...] = ((1, 0), (0, 1), (1, 1))
    distance: Literal["sqeuclidean"] = "sqeuclidean"
    band_width: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_steps(self) -> "DtwConfig":
        if set(self.local_steps) != {(1, 0), (0, 1), (1, 1)}:
            raise ValueError("local_steps must be {(1,0), (0,1), (1,1)}")
        return self

class GmmConfig(BaseModel):
    """Joint-density GMM baseline settings."""
    n_components: int = Field(64, ge=1)
    max_iter: int = Field(100, ge=1)
    tol: float = Field(1e-6, gt=0)
    variance_floor: float = Field(1e-6, gt=0)
    n_coefficients: int = Field(25, ge=1)
    seed: int = 0

class TrainConfig(BaseModel):
    """Momentum SGD settings for one training phase."""
    learning_rate: float = Field(0.01, gt=0)
    momentum: float = Field(0.3, ge=0, lt=1)
    batch_size: int = Field(256, ge=1)
    max_epochs: int = Field(20, ge=1)
    l1_lambda: float = Field(0.0, ge=0)
    seed: int = 0
    patience: Optional[int] = Field(None, ge=1)
    validation_fraction: float = Field(0.0, ge=0, lt=0.5)
    normalize: bool = True

class NetConfig(BaseModel):
    """Architecture plus the training phases of one network."""
    hidden_sizes: List[int] = Field(default_factory=lambda: [256, 256, 256])
    preset: Optional[str] = None
    finetune: TrainConfig = Field(default_factory=lambda: TrainConfig(max_epochs=20))
    pretrain: TrainConfig = Field(default_factory=lambda: TrainConfig(max_epochs=40, l1_lambda=1e-4))
    dlp_stage_epochs: int = Field(5, ge=1)

    @model_validator(mode="after")
    def _check_sizes(self) -> "NetConfig":
        if self.preset is not None and self.preset not in PRESET_HIDDEN_SIZES:
            raise ValueError(f"unknown preset '{self.preset}', expected one of {sorted(PRESET_HIDDEN_SIZES)}")
        if any(size < 1 for size in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be positive")
        return self

    def layer_sizes(self, input_dim: int, output_dim: int) -> List[int]:
        """Full dimension chain [input, *hidden, output]."""
        hidden = PRESET_HIDDEN_SIZES[self.preset] if self.preset else self.hidden_sizes
        return [input_dim, *hidden, output_dim]

class ProsodyConfig(BaseModel):
    """Segment-level F0, intensity and duration settings."""
    segment_length: int = Field(55, ge=2)
    duration_frames: int = Field(5, ge=1)
    ratio_clamp: Tuple[float, float] = (0.5, 2.0)
    f0_log_domain: bool = False
    segment_mean: Literal["meanvar", "frame-dnn"] = "meanvar"
    frame_window: int = Field(7, ge=1)
    net: NetConfig = Field(default_factory=lambda: NetConfig(hidden_sizes=[64, 64]))
    duration_net: NetConfig = Field(default_factory=lambda: NetConfig(hidden_sizes=[32, 32]))

    @model_validator(mode="after")
    def _check_clamp(self) -> "ProsodyConfig":
        low, high = self.ratio_clamp
        if not 0 < low <= 1 <= high:
            raise ValueError("ratio_clamp must satisfy 0 < low <= 1 <= high")
        if self.frame_window % 2 == 0:
            raise ValueError("frame_window must be odd")
        return self

class ConvertConfig(BaseModel):
    """Which trained systems feed cmd_convert, and which stages run."""
    spectrum_system: Optional[SystemId] = SystemId.DNN_SP_AUTOENCODER
    f0_system: Optional[SystemId] = SystemId.F0_DNN_SEGMENT
    intensity: bool = True
    duration: bool = True
    synthesize: bool = False

    @model_validator(mode="after")
    def _check_systems(self) -> "ConvertConfig":
        if self.spectrum_system is not None and self.spectrum_system not in SPECTRAL_SYSTEMS:
            raise ValueError(f"{self.spectrum_system.value} is not a spectral system")
        if self.f0_system is not None and self.f0_system not in F0_SYSTEMS:
            raise ValueError(f"{self.f0_system.value} is not an F0 system")
        return self

class SyntheticConfig(BaseModel):
    """Parameters of the make-synthetic oracle corpus."""
    n_train: int = Field(30, ge=1)
    n_test: int = Field(10, ge=0)
    phones_per_utterance: Tuple[int, int] = (6, 10)
    phone_inventory: int = Field(8, ge=2)
    unvoiced_fraction: float = Field(0.25, ge=0, lt=1)
    phone_duration_s: Tuple[float, float] = (0.06, 0.14)
    silence_s: float = Field(0.05, ge=0)
    duration_scale: Tuple[float, float] = (0.75, 1.35)
    spectral_warp: float = Field(1.12, gt=0)
    f0_scale: float = Field(1.5, gt=0)
    f0_offset_hz: float = 20.0
    f0_shape_hz: float = Field(15.0, ge=0)
    gain_db: float = 3.0
    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self) -> "SyntheticConfig":
        low, high = self.phones_per_utterance
        if not 1 <= low <= high:
            raise ValueError("phones_per_utterance must satisfy 1 <= low <= high")
        if not 0 < self.phone_duration_s[0] <= self.phone_duration_s[1]:
            raise ValueError("phone_duration_s must be a positive (low, high) range")
        if not 0.5 <= self.duration_scale[0] <= self.duration_scale[1] <= 2.0:
            raise ValueError("duration_scale must lie within [0.5, 2.0]")
        return self

class ExperimentConfig(BaseSettings):
    """Top-level experiment configuration.

    Values are loaded from keyword overrides, `VCFORGE_*` environment
    variables, a `.env` file and an optional TOML file, in that order.
    """
    model_config = SettingsConfigDict(
        env_prefix="VCFORGE_",
        env_nested_delimiter="__",
        env_file=".env",
        case_sensitive=False,
        extra="forbid",
    )

    manifest: Optional[Path] = None
    train_ids: List[str] = Field(default_factory=list)
    test_ids: List[str] = Field(default_factory=list)
    system: SystemId = SystemId.DNN_SP_AUTOENCODER
    seed: int = 0
    workdir: Path = Path("vcforge_runs")
    jobs: int = Field(1, ge=1)
    deterministic: bool = False
    log_dir: str = "logs"

    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    dtw: DtwConfig = Field(default_factory=DtwConfig)
    gmm: GmmConfig = Field(default_factory=GmmConfig)
    spectrum: NetConfig = Field(default_factory=NetConfig)
    spectrum256: NetConfig = Field(default_factory=lambda: NetConfig(hidden_sizes=[256, 256]))
    mcep: NetConfig = Field(default_factory=lambda: NetConfig(
        hidden_sizes=[50, 50], finetune=TrainConfig(max_epochs=40, batch_size=64)))
    f0_frame: NetConfig = Field(default_factory=lambda: NetConfig(hidden_sizes=[128, 128]))
    prosody: ProsodyConfig = Field(default_factory=ProsodyConfig)
    convert: ConvertConfig = Field(default_factory=ConvertConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, env_settings, dotenv_settings, TomlConfigSettingsSource(settings_cls))

    @model_validator(mode="after")
    def _check_splits(self) -> "ExperimentConfig":
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"train and test splits overlap: {sorted(overlap)}")
        return self

def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> ExperimentConfig:
    """Build an ExperimentConfig from an optional TOML file plus CLI overrides.

    Args:
        path (Optional[Union[str, Path]]): TOML file with sections such as [analysis], [gmm].
        **overrides: Highest-precedence values, typically parsed CLI flags.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        ConfigError: If the file is missing or any value fails validation.
    """
    overrides = {key: value for key, value in overrides.items() if value is not None}
    try:
        if path is None:
            return ExperimentConfig(**overrides)
        if not Path(path).is_file():
            raise ConfigError(f"Config file not found: {path}")

        class _FileBackedConfig(ExperimentConfig):
            model_config = SettingsConfigDict(**{**ExperimentConfig.model_config, "toml_file": Path(path)})

        loaded = _FileBackedConfig(**overrides)
        return ExperimentConfig.model_validate(loaded.model_dump())
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e

def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON dump, ignoring fields that do not change results."""
    canonical = config.model_dump_json(exclude={"workdir", "jobs", "log_dir", "manifest"})
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
