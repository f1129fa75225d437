#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/models.py
Created: 2026-09-02 12:36:18 UTC

Description:
    This module defines Pydantic models for validating external records:
    label lines, manifest rows, run metadata and stored prosody statistics.
'''

from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from vcforge.domain.domain import MeanVarStats

class PhoneLabelRow(BaseModel):
    """One `start_s end_s label` line of a phone label file."""
    start_s: float = Field(ge=0)
    end_s: float
    label: str = Field(min_length=1)

    @model_validator(mode="after")
    def _check_order(self) -> "PhoneLabelRow":
        if self.end_s <= self.start_s:
            raise ValueError(f"end {self.end_s} is not after start {self.start_s}")
        return self

class ManifestEntry(BaseModel):
    """One manifest line: `utt_id src_wav src_lab tgt_wav tgt_lab`."""
    utt_id: str = Field(min_length=1)
    src_wav: Path
    src_lab: Path
    tgt_wav: Path
    tgt_lab: Path

    def resolved(self, base_dir: Path) -> "ManifestEntry":
        """Copy with relative paths resolved against the manifest's directory."""
        def _resolve(path: Path) -> Path:
            return path if path.is_absolute() else base_dir / path
        return self.model_copy(update={
            "src_wav": _resolve(self.src_wav),
            "src_lab": _resolve(self.src_lab),
            "tgt_wav": _resolve(self.tgt_wav),
            "tgt_lab": _resolve(self.tgt_lab),
        })

class MeanVarModel(BaseModel):
    """Stored F0 mean-variance statistics (exactly the four scalars)."""
    source_mean: float
    source_std: float = Field(gt=0)
    target_mean: float
    target_std: float = Field(gt=0)

    @classmethod
    def from_domain(cls, stats: MeanVarStats) -> "MeanVarModel":
        return cls(
            source_mean=stats.source_mean,
            source_std=stats.source_std,
            target_mean=stats.target_mean,
            target_std=stats.target_std,
        )

    def to_domain(self) -> MeanVarStats:
        """Convert this pydantic model to the domain container."""
        return MeanVarStats(
            source_mean=self.source_mean,
            source_std=self.source_std,
            target_mean=self.target_mean,
            target_std=self.target_std,
        )

class PhaseSummary(BaseModel):
    """Epoch count and final loss of one training phase."""
    phase: str
    epochs: int
    final_mse: Optional[float] = None

class RunMetadata(BaseModel):
    """Self-description written next to the model files of every training run."""
    system: str
    seed: int
    config_hash: str
    train_ids: List[str]
    model_files: List[str]
    phases: List[PhaseSummary] = Field(default_factory=list)
    versions: Dict[str, str] = Field(default_factory=dict)
    deterministic: bool = False
