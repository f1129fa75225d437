#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/__init__.py
Created: 2026-09-02 11:52:03 UTC

Description:
    Import the shared containers and exceptions for easier access.
    Algorithm modules are imported explicitly (vcforge.gmm, vcforge.net, ...).
'''
from .domain.domain import (
    Audio, FeatureTrack, PhoneSegment, PhoneSegmentList, UtterancePair,
    WarpingPath, VoicedSegment, F0DiffFeature, MeanVarStats, DurationSample,
    UtteranceScore, EvalReport,
)
from .exceptions import (
    VcForgeError, FeatureFormatError, AudioReadError, InputValidationError,
    StageMismatchError, AlignmentStateError, TrainingError, NumericError,
    UndefinedMetricError, ConfigError, ModelNotFoundError,
)

__version__ = "0.3.0"
