#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/exceptions.py
Created: 2026-09-02 10:14:51 UTC

Description:
    This module defines `custom exceptions` for the voice conversion toolkit.
'''


class VcForgeError(Exception):
    """Base exception for all vcforge errors."""
    pass

class FeatureFormatError(VcForgeError):
    """Raised when an on-disk file does not follow its declared format.

    Examples:
        - Magic number or version mismatch in a feature or model file
        - Declared frame count inconsistent with the stored data
        - WAV file that is not 16-bit PCM mono
    """
    pass

class AudioReadError(VcForgeError):
    """Raised when audio cannot be read, e.g. a truncated data chunk."""
    pass

class InputValidationError(VcForgeError):
    """Raised when an operation's preconditions are violated."""
    pass

class StageMismatchError(InputValidationError):
    """Raised when a model and the features fed to it disagree in shape.

    Attributes:
        stage (str): Conversion stage that detected the mismatch.
    """
    stage: str

    def __init__(self, stage: str, message: str) -> None:
        self.stage = stage
        super().__init__(f"[{stage}] {message}")

class AlignmentStateError(VcForgeError):
    """Raised when an aligned pair is required but no alignment is present."""
    pass

class TrainingError(VcForgeError):
    """Raised when model training cannot proceed or diverges."""
    pass

class NumericError(VcForgeError):
    """Raised on numerically singular quantities at conversion time."""
    pass

class UndefinedMetricError(VcForgeError):
    """Raised when an objective metric has no frames to be computed over."""
    pass

class ConfigError(VcForgeError):
    """Raised when the experiment configuration is invalid."""
    pass

class ModelNotFoundError(VcForgeError):
    """Raised when a referenced model file does not exist."""
    pass
