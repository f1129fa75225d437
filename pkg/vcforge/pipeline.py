#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/pipeline.py
Created: 2026-09-09 11:06:22 UTC

Description:
    End-to-end experiment driver behind the `vcforge` subcommands:
    feature extraction, alignment, training of every conversion system,
    conversion of test utterances and objective evaluation.

    Run directory layout:
        features/{utt}.{src|tgt}.{env|f0|int}.vcft  and  {utt}.{src|tgt}.lab
        alignments/{utt}.align
        models/{system}/      model files, train_log.csv, run.json
        converted/{label}/    {utt}.env.vcft, {utt}.f0.vcft, {utt}.lab, {utt}.wav
        reports/{label}/      report.txt, report.kv, report.csv
        registry.sqlite
'''

import csv
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy
import sklearn
from joblib import Parallel, delayed
from pydantic import ValidationError

import vcforge
from config import ConvertConfig, ExperimentConfig, NetConfig, SystemId, config_hash
from vcforge import analysis, featio, metrics, prosody
from vcforge.align import read_alignment, stack_pairs, two_stage_align, write_alignment
from vcforge.database_manager.database import RunRegistry
from vcforge.domain.domain import EvalReport, FeatureTrack, PhoneSegmentList, UtterancePair, UtteranceScore
from vcforge.exceptions import (
    InputValidationError,
    ModelNotFoundError,
    StageMismatchError,
    VcForgeError,
)
from vcforge.gmm import convert_matrix, em_train, load_gmm, save_gmm
from vcforge.models import ManifestEntry, MeanVarModel, PhaseSummary, RunMetadata
from vcforge.net import (
    FeedForwardNet,
    TrainingHistory,
    forward,
    init_random,
    load_net,
    pretrain_autoencoder,
    pretrain_dlp,
    save_net,
    train,
)

# Get a logger for this module
logger = logging.getLogger(__name__)

SIDES = ("src", "tgt")
TRACK_KINDS = ("env", "f0", "int")
NET_FILE = "net.vcnn"
GMM_FILE = "gmm.vcgm"
MEANVAR_FILE = "meanvar.json"
F0_CONTEXT_RADIUS = 2

"""=========================== RUN LAYOUT ==========================="""
@dataclass(frozen=True)
class RunPaths:
    """File locations inside one run directory."""
    root: Path

    def feature(self, utt_id: str, side: str, kind: str) -> Path:
        return self.root / "features" / f"{utt_id}.{side}.{kind}.vcft"

    def labels(self, utt_id: str, side: str) -> Path:
        return self.root / "features" / f"{utt_id}.{side}.lab"

    def alignment(self, utt_id: str) -> Path:
        return self.root / "alignments" / f"{utt_id}.align"

    def model_dir(self, system: str) -> Path:
        return self.root / "models" / system

    def converted_dir(self, label: str) -> Path:
        return self.root / "converted" / label

    def report_dir(self, label: str) -> Path:
        return self.root / "reports" / label

    @property
    def registry(self) -> Path:
        return self.root / "registry.sqlite"

@dataclass
class StageSummary:
    """Outcome of one utterance-level command."""
    command: str
    succeeded: List[str] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    failed: Dict[str, str] = field(default_factory=dict)
    files_written: int = 0
    output: Optional[Path] = None

    @property
    def exit_code(self) -> int:
        return 1 if self.failed else 0

@dataclass(frozen=True, eq=False)
class UtteranceFeatures:
    """Extracted tracks and frame-indexed phones of one speaker's recording."""
    envelope: FeatureTrack
    f0vuv: FeatureTrack
    intensity: FeatureTrack
    phones: PhoneSegmentList

@dataclass(frozen=True, eq=False)
class AlignedUtterance:
    """Both speakers' features plus the envelope-level aligned pair."""
    utt_id: str
    source: UtteranceFeatures
    target: UtteranceFeatures
    pair: UtterancePair

    def retracked(self, source: FeatureTrack, target: FeatureTrack) -> UtterancePair:
        """The alignment applied to another pair of tracks on the same timelines."""
        return self.pair.with_tracks(source, target)

"""=========================== MANIFEST ==========================="""
def load_manifest(path: Path) -> List[ManifestEntry]:
    """Parse `utt_id src_wav src_lab tgt_wav tgt_lab` lines; relative paths resolve against the manifest.

    Raises:
        InputValidationError: On unreadable files, malformed lines or duplicate ids.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputValidationError(f"Cannot read manifest {path}: {e}") from e

    entries: List[ManifestEntry] = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 5:
            raise InputValidationError(f"{path}:{lineno}: expected 'utt_id src_wav src_lab tgt_wav tgt_lab'")
        try:
            entry = ManifestEntry(**dict(zip(ManifestEntry.model_fields, fields)))
        except ValidationError as e:
            raise InputValidationError(f"{path}:{lineno}: {e.errors()[0]['msg']}") from e
        if entry.utt_id in seen:
            raise InputValidationError(f"{path}:{lineno}: duplicate utterance id '{entry.utt_id}'")
        seen.add(entry.utt_id)
        entries.append(entry.resolved(path.parent))
    logger.info(f"Loaded manifest {path} with {len(entries)} utterances")
    return entries

def _manifest(config: ExperimentConfig) -> List[ManifestEntry]:
    if config.manifest is None:
        raise InputValidationError("no manifest configured; pass --manifest or set it in the config file")
    return load_manifest(config.manifest)

def split_ids(config: ExperimentConfig, entries: Sequence[ManifestEntry]) -> Tuple[List[str], List[str]]:
    """Train and test ids in manifest order.

    An empty train list means every manifest id not in the test list; an
    empty test list means every id not in the train list.
    """
    known = [entry.utt_id for entry in entries]
    unknown = sorted(set(config.train_ids + config.test_ids) - set(known))
    if unknown:
        logger.warning(f"Split lists name ids missing from the manifest: {unknown}")
    train_ids = [utt for utt in known if utt in config.train_ids]
    test_ids = [utt for utt in known if utt in config.test_ids]
    if not config.train_ids:
        train_ids = [utt for utt in known if utt not in test_ids]
    elif not config.test_ids:
        test_ids = [utt for utt in known if utt not in train_ids]
    return train_ids, test_ids

def _parallel(config: ExperimentConfig) -> Parallel:
    return Parallel(n_jobs=1 if config.deterministic else config.jobs)

"""=========================== EXTRACT ==========================="""
def _extract_one(entry: ManifestEntry, paths: RunPaths, config: ExperimentConfig, force: bool) -> Tuple[str, int, Optional[str]]:
    targets = [paths.feature(entry.utt_id, side, kind) for side in SIDES for kind in TRACK_KINDS]
    targets += [paths.labels(entry.utt_id, side) for side in SIDES]
    if not force and all(p.exists() for p in targets):
        return entry.utt_id, 0, None
    try:
        written = 0
        for side, wav, lab in (("src", entry.src_wav, entry.src_lab), ("tgt", entry.tgt_wav, entry.tgt_lab)):
            audio = featio.read_wav(wav)
            phones = featio.read_phone_labels(lab, config.analysis.frame_shift_s)
            result = analysis.analyze(audio, config.analysis)
            phones.validate_against(result.envelope.n_frames)
            for kind, track in zip(TRACK_KINDS, result):
                featio.write_track(track, paths.feature(entry.utt_id, side, kind))
                written += 1
            featio.write_phone_labels(paths.labels(entry.utt_id, side), phones, config.analysis.frame_shift_s)
        return entry.utt_id, written, None
    except (VcForgeError, OSError) as e:
        return entry.utt_id, 0, f"{type(e).__name__}: {e}"

def cmd_extract(config: ExperimentConfig, force: bool = False) -> StageSummary:
    """Analyze every manifest utterance for both speakers.

    Existing feature sets are skipped unless `force`. A failing utterance is
    recorded and the run continues.
    """
    paths = RunPaths(config.workdir)
    entries = _manifest(config)
    summary = StageSummary("extract", output=paths.root / "features")
    results = _parallel(config)(delayed(_extract_one)(entry, paths, config, force) for entry in entries)
    for utt_id, written, error in results:
        if error:
            logger.error(f"extract {utt_id} failed: {error}")
            summary.failed[utt_id] = error
        elif written:
            summary.succeeded.append(utt_id)
            summary.files_written += written
        else:
            summary.skipped.append(utt_id)
    logger.info(f"extract: {len(summary.succeeded)} extracted, {len(summary.skipped)} skipped, "
                f"{len(summary.failed)} failed")
    return summary

"""=========================== ALIGN ==========================="""
def load_features(paths: RunPaths, utt_id: str, side: str, frame_shift_s: float) -> UtteranceFeatures:
    envelope, f0vuv, intensity = (featio.read_track(paths.feature(utt_id, side, kind)) for kind in TRACK_KINDS)
    phones = featio.read_phone_labels(paths.labels(utt_id, side), frame_shift_s)
    return UtteranceFeatures(envelope, f0vuv, intensity, phones)

def load_aligned(paths: RunPaths, utt_id: str, config: ExperimentConfig, write: bool = True) -> AlignedUtterance:
    """Both speakers' features with the stored alignment, aligning now if none is stored."""
    shift = config.analysis.frame_shift_s
    source = load_features(paths, utt_id, "src", shift)
    target = load_features(paths, utt_id, "tgt", shift)
    pair = UtterancePair(source.envelope, target.envelope, source.phones, target.phones, utt_id=utt_id)
    alignment_path = paths.alignment(utt_id)
    if alignment_path.exists():
        pair = UtterancePair(pair.source, pair.target, pair.source_phones, pair.target_phones,
                             read_alignment(alignment_path), utt_id)
    else:
        pair = two_stage_align(pair, config.dtw)
        if write:
            write_alignment(alignment_path, pair.alignment)
    return AlignedUtterance(utt_id, source, target, pair)

def _align_one(utt_id: str, paths: RunPaths, config: ExperimentConfig, force: bool) -> Tuple[str, int, Optional[str]]:
    if not force and paths.alignment(utt_id).exists():
        return utt_id, 0, None
    try:
        shift = config.analysis.frame_shift_s
        source = load_features(paths, utt_id, "src", shift)
        target = load_features(paths, utt_id, "tgt", shift)
        pair = UtterancePair(source.envelope, target.envelope, source.phones, target.phones, utt_id=utt_id)
        write_alignment(paths.alignment(utt_id), two_stage_align(pair, config.dtw).alignment)
        return utt_id, 1, None
    except (VcForgeError, OSError) as e:
        return utt_id, 0, f"{type(e).__name__}: {e}"

def cmd_align(config: ExperimentConfig, force: bool = False) -> StageSummary:
    """Two-stage alignment of every extracted utterance, written as text paths."""
    paths = RunPaths(config.workdir)
    train_ids, test_ids = split_ids(config, _manifest(config))
    summary = StageSummary("align", output=paths.root / "alignments")
    results = _parallel(config)(delayed(_align_one)(utt, paths, config, force) for utt in train_ids + test_ids)
    for utt_id, written, error in results:
        if error:
            logger.error(f"align {utt_id} failed: {error}")
            summary.failed[utt_id] = error
        elif written:
            summary.succeeded.append(utt_id)
            summary.files_written += written
        else:
            summary.skipped.append(utt_id)
    return summary

"""=========================== FEATURE VIEWS ==========================="""
def spectral_input(features: UtteranceFeatures) -> FeatureTrack:
    """Static, delta and delta-delta envelope plus the VUV flag."""
    return FeatureTrack.hstack([analysis.append_deltas(features.envelope), features.f0vuv.columns([1])])

def cepstral_input(envelope: FeatureTrack, n_coefficients: int) -> FeatureTrack:
    return analysis.append_deltas(analysis.envelope_to_cepstrum(envelope, n_coefficients))

def _log_f0_context(f0vuv: FeatureTrack, radius: int = F0_CONTEXT_RADIUS) -> FeatureTrack:
    f0 = f0vuv.data[:, 0]
    log_f0 = np.where(f0 > 0, np.log(np.where(f0 > 0, f0, 1.0)), 0.0)
    dynamic = analysis.append_deltas(FeatureTrack(log_f0, f0vuv.frame_shift_s, ("logf0",))).data
    padded = np.pad(dynamic, ((radius, radius), (0, 0)), mode="edge")
    context = np.hstack([padded[k:k + f0vuv.n_frames] for k in range(2 * radius + 1)])
    return FeatureTrack(context, f0vuv.frame_shift_s, ("logf0ctx",) * context.shape[1])

def half_resolution_input(features: UtteranceFeatures) -> FeatureTrack:
    """Bin-averaged envelope with dynamics, log-F0 context and VUV."""
    reduced = analysis.append_deltas(analysis.downsample_envelope(features.envelope))
    return FeatureTrack.hstack([reduced, _log_f0_context(features.f0vuv), features.f0vuv.columns([1])])

def _static(track: FeatureTrack) -> FeatureTrack:
    return track.columns(track.static_columns())

"""=========================== TRAIN ==========================="""
def _net_config(config: ExperimentConfig, system: SystemId) -> NetConfig:
    if system == SystemId.DNN_MCEP:
        return config.mcep
    if system == SystemId.DNN_SP256_DLP:
        return config.spectrum256
    if system == SystemId.F0_DNN_FRAME:
        return config.f0_frame
    if system in (SystemId.F0_DNN_SEGMENT, SystemId.INTENSITY_DNN_SEGMENT):
        return config.prosody.net
    if system == SystemId.DURATION_DNN:
        return config.prosody.duration_net
    return config.spectrum

def _phase(history: TrainingHistory) -> PhaseSummary:
    return PhaseSummary(phase=history.phase, epochs=history.epochs, final_mse=history.final_mse)

def _write_train_log(path: Path, histories: Sequence[TrainingHistory]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["phase", "epoch", "mse", "validation_mse"])
        for history in histories:
            for epoch, mse in enumerate(history.mse, start=1):
                valid = history.validation_mse[epoch - 1] if epoch <= len(history.validation_mse) else ""
                writer.writerow([history.phase, epoch, repr(mse), repr(valid) if valid != "" else ""])

def _write_snapshot(model_dir: Path, stage: str, net: FeedForwardNet, inputs: FeatureTrack,
                    restore: Optional[Callable[[np.ndarray], FeatureTrack]] = None) -> None:
    output = forward(net, inputs.data)
    track = restore(output) if restore else FeatureTrack(output, inputs.frame_shift_s)
    featio.write_track(track, model_dir / f"snapshot_{stage}.vcft")

def _train_spectral_net(system: SystemId, config: ExperimentConfig, utterances: Sequence[AlignedUtterance],
                        model_dir: Path) -> List[TrainingHistory]:
    net_config = _net_config(config, system)
    order = config.analysis.envelope_order
    restore: Optional[Callable[[np.ndarray], FeatureTrack]] = None
    shift = config.analysis.frame_shift_s
    if system == SystemId.DNN_MCEP:
        n = config.gmm.n_coefficients
        pairs = [u.retracked(cepstral_input(u.source.envelope, n),
                             analysis.envelope_to_cepstrum(u.target.envelope, n)) for u in utterances]
        snapshot_input = pairs[0].source
        restore = lambda y: analysis.cepstrum_to_envelope(FeatureTrack(y, shift), order)
    elif system == SystemId.DNN_SP256_DLP:
        pairs = [u.retracked(half_resolution_input(u.source), analysis.downsample_envelope(u.target.envelope))
                 for u in utterances]
        snapshot_input = pairs[0].source
        restore = lambda y: analysis.upsample_envelope(FeatureTrack(y, shift), order)
    else:
        pairs = [u.retracked(spectral_input(u.source), _static(u.target.envelope)) for u in utterances]
        snapshot_input = pairs[0].source
    inputs, targets = stack_pairs(pairs)
    logger.info(f"{system.value}: {len(inputs)} aligned frames, {inputs.shape[1]} -> {targets.shape[1]} dims")

    net = init_random(net_config.layer_sizes(inputs.shape[1], targets.shape[1]), seed=config.seed)
    _write_snapshot(model_dir, "random", net, snapshot_input, restore)
    histories: List[TrainingHistory] = []
    finetune = net_config.finetune.model_copy(update={"seed": config.seed})
    if system == SystemId.DNN_SP_AUTOENCODER:
        pretrain = net_config.pretrain.model_copy(update={"seed": config.seed})
        net, history = pretrain_autoencoder(net, inputs, pretrain)
        histories.append(history)
        _write_snapshot(model_dir, "pretrained", net, snapshot_input, restore)
    elif system in (SystemId.DNN_SP_DLP, SystemId.DNN_SP256_DLP):
        net, stage_histories = pretrain_dlp(net, inputs, targets, finetune, net_config.dlp_stage_epochs)
        histories.extend(stage_histories)
        _write_snapshot(model_dir, "pretrained", net, snapshot_input, restore)
    net, history = train(net, inputs, targets, finetune, phase="finetune")
    histories.append(history)
    _write_snapshot(model_dir, "finetuned", net, snapshot_input, restore)
    save_net(net, model_dir / NET_FILE)
    return histories

def _train_prosody_net(system: SystemId, config: ExperimentConfig, utterances: Sequence[AlignedUtterance],
                       model_dir: Path) -> List[TrainingHistory]:
    prosody_config = config.prosody
    log_domain = prosody_config.f0_log_domain
    if system == SystemId.F0_DNN_SEGMENT:
        pairs = [u.retracked(u.source.f0vuv, u.target.f0vuv) for u in utterances]
        inputs, targets = prosody.build_f0_training_set(pairs, prosody_config.segment_length, log_domain)
        stats = prosody.fit_meanvar([u.source.f0vuv for u in utterances], [u.target.f0vuv for u in utterances],
                                    log_domain)
        (model_dir / MEANVAR_FILE).write_text(MeanVarModel.from_domain(stats).model_dump_json(indent=2),
                                             encoding="utf-8")
    elif system == SystemId.INTENSITY_DNN_SEGMENT:
        pairs = [u.retracked(prosody.intensity_with_voicing(u.source.intensity, u.source.f0vuv),
                             prosody.intensity_with_voicing(u.target.intensity, u.target.f0vuv))
                 for u in utterances]
        inputs, targets = prosody.build_intensity_training_set(pairs, prosody_config.segment_length)
    elif system == SystemId.F0_DNN_FRAME:
        pairs = [u.retracked(u.source.f0vuv, u.target.f0vuv) for u in utterances]
        inputs, targets = prosody.build_frame_f0_training_set(pairs, prosody_config.frame_window, log_domain)
    else:
        samples = [s for u in utterances for s in prosody.build_duration_samples(u.pair, prosody_config.duration_frames)]
        if not samples:
            raise InputValidationError("no phones long enough for duration training")
        inputs = np.vstack([s.input for s in samples])
        targets = np.array([[s.ratio] for s in samples])

    net_config = _net_config(config, system)
    net = init_random(net_config.layer_sizes(inputs.shape[1], targets.shape[1]), seed=config.seed)
    net, history = train(net, inputs, targets, net_config.finetune.model_copy(update={"seed": config.seed}))
    save_net(net, model_dir / NET_FILE)
    return [history]

def cmd_train(config: ExperimentConfig, system: Optional[SystemId] = None) -> RunMetadata:
    """Train one system on the training split and describe the run next to its model files.

    Raises:
        VcForgeError: From feature loading, alignment or training, with context.
    """
    system = SystemId(system or config.system)
    paths = RunPaths(config.workdir)
    train_ids, _ = split_ids(config, _manifest(config))
    if not train_ids:
        raise InputValidationError("training split is empty")
    model_dir = paths.model_dir(system.value)
    model_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Training {system.value} on {len(train_ids)} utterances (seed {config.seed})")

    utterances = [load_aligned(paths, utt, config) for utt in train_ids]
    histories: List[TrainingHistory] = []
    phases: List[PhaseSummary] = []
    if system == SystemId.JD_GMM:
        n = config.gmm.n_coefficients
        pairs = [u.retracked(analysis.envelope_to_cepstrum(u.source.envelope, n),
                             analysis.envelope_to_cepstrum(u.target.envelope, n)) for u in utterances]
        source, target = stack_pairs(pairs)
        result = em_train(source, target, config.gmm.n_components, config.gmm.model_copy(update={"seed": config.seed}))
        save_gmm(result.model, model_dir / GMM_FILE)
        phases.append(PhaseSummary(phase="em", epochs=result.n_iter, final_mse=None))
        histories.append(TrainingHistory("em", list(result.log_likelihoods)))
    elif system == SystemId.F0_MEANVAR:
        stats = prosody.fit_meanvar([u.source.f0vuv for u in utterances], [u.target.f0vuv for u in utterances],
                                    config.prosody.f0_log_domain)
        (model_dir / MEANVAR_FILE).write_text(MeanVarModel.from_domain(stats).model_dump_json(indent=2),
                                             encoding="utf-8")
    elif system in (SystemId.F0_DNN_FRAME, SystemId.F0_DNN_SEGMENT, SystemId.INTENSITY_DNN_SEGMENT,
                    SystemId.DURATION_DNN):
        histories = _train_prosody_net(system, config, utterances, model_dir)
    else:
        histories = _train_spectral_net(system, config, utterances, model_dir)

    if system != SystemId.JD_GMM:
        phases = [_phase(h) for h in histories]
    _write_train_log(model_dir / "train_log.csv", histories)
    metadata = RunMetadata(
        system=system.value,
        seed=config.seed,
        config_hash=config_hash(config),
        train_ids=train_ids,
        model_files=sorted(p.name for p in model_dir.iterdir() if p.name != "run.json"),
        phases=phases,
        versions={
            "vcforge": vcforge.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
            "python": platform.python_version(),
        },
        deterministic=config.deterministic,
    )
    (model_dir / "run.json").write_text(metadata.model_dump_json(indent=2), encoding="utf-8")
    RunRegistry(paths.registry).record_run(metadata)
    return metadata

"""=========================== CONVERT ==========================="""
def conversion_label(convert: ConvertConfig) -> str:
    """Directory name of a conversion setup, e.g. `DNN-SP-Autoencoder+F0-DNN-Segment+Intensity`."""
    parts = [convert.spectrum_system.value if convert.spectrum_system else "source-spectrum"]
    if convert.f0_system:
        parts.append(convert.f0_system.value)
    if convert.intensity:
        parts.append("Intensity")
    if convert.duration:
        parts.append("Duration")
    return "+".join(parts)

def effective_convert_config(config: ExperimentConfig, no_f0: bool = False, no_intensity: bool = False,
                             no_duration: bool = False, synthesize: Optional[bool] = None) -> ConvertConfig:
    update: Dict[str, object] = {}
    if no_f0:
        update["f0_system"] = None
    if no_intensity:
        update["intensity"] = False
    if no_duration:
        update["duration"] = False
    if synthesize is not None:
        update["synthesize"] = synthesize
    return config.convert.model_copy(update=update)

class ModelStore:
    """Lazy, cached access to trained models of a run directory."""
    paths: RunPaths
    _cache: Dict[Tuple[str, str], object]

    def __init__(self, paths: RunPaths) -> None:
        self.paths = paths
        self._cache = {}

    def _file(self, system: SystemId, name: str) -> Path:
        path = self.paths.model_dir(system.value) / name
        if not path.exists():
            raise ModelNotFoundError(f"{system.value}: missing {path}; run `vcforge train --system {system.value}`")
        return path

    def net(self, system: SystemId) -> FeedForwardNet:
        key = (system.value, NET_FILE)
        if key not in self._cache:
            self._cache[key] = load_net(self._file(system, NET_FILE))
        return self._cache[key]

    def gmm(self, system: SystemId):
        key = (system.value, GMM_FILE)
        if key not in self._cache:
            self._cache[key] = load_gmm(self._file(system, GMM_FILE))
        return self._cache[key]

    def meanvar(self, system: SystemId):
        key = (system.value, MEANVAR_FILE)
        if key not in self._cache:
            text = self._file(system, MEANVAR_FILE).read_text(encoding="utf-8")
            self._cache[key] = MeanVarModel.model_validate_json(text).to_domain()
        return self._cache[key]

def _run_net(net: FeedForwardNet, inputs: np.ndarray, stage: str) -> np.ndarray:
    if inputs.shape[1] != net.input_dim:
        raise StageMismatchError(stage, f"model expects {net.input_dim} input dims, features give {inputs.shape[1]}")
    return forward(net, inputs)

def convert_spectrum(source: UtteranceFeatures, system: Optional[SystemId], store: ModelStore,
                     config: ExperimentConfig) -> FeatureTrack:
    """Converted static log envelope on the source timeline."""
    envelope = _static(source.envelope)
    if system is None:
        return envelope
    order = config.analysis.envelope_order
    shift = envelope.frame_shift_s
    if system == SystemId.JD_GMM:
        model = store.gmm(system)
        cepstrum = analysis.envelope_to_cepstrum(envelope, model.dim)
        converted = convert_matrix(model, cepstrum.data)
        return analysis.cepstrum_to_envelope(FeatureTrack(converted, shift), order)
    net = store.net(system)
    if system == SystemId.DNN_MCEP:
        cepstrum = cepstral_input(envelope, config.gmm.n_coefficients)
        return analysis.cepstrum_to_envelope(FeatureTrack(_run_net(net, cepstrum.data, "spectrum"), shift), order)
    if system == SystemId.DNN_SP256_DLP:
        reduced = _run_net(net, half_resolution_input(source).data, "spectrum")
        return analysis.upsample_envelope(FeatureTrack(reduced, shift), order)
    output = _run_net(net, spectral_input(source).data, "spectrum")
    if output.shape[1] != order:
        raise StageMismatchError("spectrum", f"model outputs {output.shape[1]} bins, analysis uses {order}")
    return FeatureTrack(output, shift, ("logsp",) * order)

def convert_f0(source: UtteranceFeatures, system: Optional[SystemId], store: ModelStore,
               config: ExperimentConfig) -> FeatureTrack:
    """Converted [f0, vuv] track; VUV always follows the source."""
    f0vuv = source.f0vuv
    if system is None:
        return f0vuv
    log_domain = config.prosody.f0_log_domain
    to_model = (lambda v: np.log(v)) if log_domain else (lambda v: v)
    from_model = (lambda v: np.exp(v)) if log_domain else (lambda v: v)
    voiced = f0vuv.data[:, 1] > 0.5
    if system == SystemId.F0_MEANVAR:
        stats = store.meanvar(system)
        data = f0vuv.data.copy()
        data[voiced, 0] = from_model(prosody.meanvar_transform(to_model(data[voiced, 0]), stats))
        return f0vuv.with_data(data)

    frame_predictions = None
    if system == SystemId.F0_DNN_FRAME or config.prosody.segment_mean == "frame-dnn":
        features = prosody.frame_f0_features(f0vuv, config.prosody.frame_window, log_domain)
        frame_predictions = _run_net(store.net(SystemId.F0_DNN_FRAME), features, "f0")[:, 0]
    if system == SystemId.F0_DNN_FRAME:
        data = f0vuv.data.copy()
        data[voiced, 0] = from_model(frame_predictions[voiced])
        return f0vuv.with_data(data)

    net = store.net(system)
    if frame_predictions is not None:
        predict_mean = lambda mean, start, end: prosody.predict_segment_mean_from_frames(frame_predictions, start, end)
    else:
        stats = store.meanvar(system)
        predict_mean = lambda mean, start, end: prosody.predict_segment_mean(mean, stats)
    return prosody.convert_f0_track(f0vuv, config.prosody.segment_length,
                                    lambda rows: _run_net(net, rows, "f0"), predict_mean, log_domain)

def convert_intensity(envelope: FeatureTrack, source: UtteranceFeatures, store: ModelStore,
                      config: ExperimentConfig) -> FeatureTrack:
    net = store.net(SystemId.INTENSITY_DNN_SEGMENT)
    predicted = prosody.predict_intensity_segments(source.intensity, source.f0vuv, config.prosody.segment_length,
                                                   lambda rows: _run_net(net, rows, "intensity"))
    return prosody.apply_intensity(envelope, predicted, config.analysis)

def predict_duration_ratios(source: UtteranceFeatures, store: ModelStore, config: ExperimentConfig) -> List[float]:
    """Predicted source/target ratio per phone; phones under two frames keep ratio 1."""
    net = store.net(SystemId.DURATION_DNN)
    n = config.prosody.duration_frames
    static = _static(source.envelope).data
    ratios = [1.0] * len(source.phones)
    rows, indices = [], []
    for index, phone in enumerate(source.phones):
        if phone.length >= 2:
            rows.append(static[phone.start_frame + prosody.resample_indices(phone.length, n)].reshape(-1))
            indices.append(index)
    if rows:
        predicted = _run_net(net, np.vstack(rows), "duration")[:, 0]
        low, high = config.prosody.ratio_clamp
        for index, ratio in zip(indices, np.clip(predicted, low, high)):
            ratios[index] = float(ratio)
    return ratios

def convert_utterance(source: UtteranceFeatures, convert: ConvertConfig, store: ModelStore,
                      config: ExperimentConfig) -> Tuple[FeatureTrack, FeatureTrack, PhoneSegmentList]:
    """Spectrum, intensity, F0, duration, in that order; returns envelope, f0/vuv and phones."""
    envelope = convert_spectrum(source, convert.spectrum_system, store, config)
    if convert.intensity:
        envelope = convert_intensity(envelope, source, store, config)
    f0vuv = convert_f0(source, convert.f0_system, store, config)
    phones = source.phones
    if convert.duration:
        ratios = predict_duration_ratios(source, store, config)
        (envelope, f0vuv), phones = prosody.apply_duration([envelope, f0vuv], phones, ratios,
                                                           config.prosody.ratio_clamp)
    return envelope, f0vuv, phones

def _convert_one(utt_id: str, paths: RunPaths, store: "ModelStore", config: ExperimentConfig, convert: ConvertConfig,
                 out_dir: Path) -> Tuple[str, int, Optional[str]]:
    try:
        source = load_features(paths, utt_id, "src", config.analysis.frame_shift_s)
        envelope, f0vuv, phones = convert_utterance(source, convert, store, config)
        featio.write_track(envelope, out_dir / f"{utt_id}.env.vcft")
        featio.write_track(f0vuv, out_dir / f"{utt_id}.f0.vcft")
        featio.write_phone_labels(out_dir / f"{utt_id}.lab", phones, config.analysis.frame_shift_s)
        written = 3
        if convert.synthesize:
            audio = analysis.synthesize(envelope, f0vuv, config.analysis, seed=config.seed)
            featio.write_wav(out_dir / f"{utt_id}.wav", audio)
            written += 1
        return utt_id, written, None
    except (VcForgeError, OSError) as e:
        return utt_id, 0, f"{type(e).__name__}: {e}"

def cmd_convert(config: ExperimentConfig, utt_ids: Optional[Sequence[str]] = None,
                convert: Optional[ConvertConfig] = None) -> StageSummary:
    """Convert source utterances (the test split by default) with the configured systems."""
    convert = convert or config.convert
    paths = RunPaths(config.workdir)
    if utt_ids is None:
        _, utt_ids = split_ids(config, _manifest(config))
    label = conversion_label(convert)
    out_dir = paths.converted_dir(label)
    summary = StageSummary("convert", output=out_dir)
    store = ModelStore(paths)
    logger.info(f"Converting {len(utt_ids)} utterances into {out_dir}")
    results = _parallel(config)(delayed(_convert_one)(utt, paths, store, config, convert, out_dir)
                                for utt in utt_ids)
    for utt_id, written, error in results:
        if error:
            logger.error(f"convert {utt_id} failed: {error}")
            summary.failed[utt_id] = error
        else:
            summary.succeeded.append(utt_id)
            summary.files_written += written
    return summary

"""=========================== EVALUATE ==========================="""
def _evaluate_one(utt_id: str, paths: RunPaths, config: ExperimentConfig, converted_dir: Path) -> UtteranceScore:
    aligned = load_aligned(paths, utt_id, config, write=False)
    converted_env = featio.read_track(converted_dir / f"{utt_id}.env.vcft")
    f0_path = converted_dir / f"{utt_id}.f0.vcft"
    converted_f0 = featio.read_track(f0_path) if f0_path.exists() else None
    label_path = converted_dir / f"{utt_id}.lab"
    if label_path.exists():
        converted_phones = featio.read_phone_labels(label_path, config.analysis.frame_shift_s)
    elif converted_env.n_frames == aligned.source.envelope.n_frames:
        converted_phones = aligned.source.phones
    else:
        converted_phones = PhoneSegmentList()

    source_env = _static(aligned.source.envelope)
    target_env = _static(aligned.target.envelope)
    if converted_env.dim != source_env.dim:
        raise StageMismatchError("evaluate", f"converted envelope has {converted_env.dim} bins, source {source_env.dim}")
    same_timeline = (converted_env.n_frames == source_env.n_frames
                     and converted_phones.entries == aligned.source.phones.entries)
    if same_timeline:
        converted_path = aligned.pair.alignment
    else:
        # phone-constrained only when the converted labels still match the target's
        if converted_phones.labels == aligned.target.phones.labels:
            dtw_phones = (converted_phones, aligned.target.phones)
        else:
            dtw_phones = (PhoneSegmentList(), PhoneSegmentList())
        converted_path = two_stage_align(
            UtterancePair(converted_env, target_env, *dtw_phones, utt_id=utt_id), config.dtw).alignment

    return metrics.score_utterance(
        utt_id, source_env, converted_env, target_env, aligned.pair.alignment, converted_path,
        converted_f0=converted_f0, target_f0=aligned.target.f0vuv,
        source_phones=aligned.source.phones, converted_phones=converted_phones)

def cmd_evaluate(config: ExperimentConfig, label: Optional[str] = None, write_csv: bool = True) -> EvalReport:
    """Score converted test utterances against the target speaker and write the report files.

    Test ids without converted files (and converted files without a test id)
    are listed as excluded.
    """
    label = label or conversion_label(config.convert)
    paths = RunPaths(config.workdir)
    _, test_ids = split_ids(config, _manifest(config))
    converted_dir = paths.converted_dir(label)
    if not converted_dir.is_dir():
        raise ModelNotFoundError(f"no converted output at {converted_dir}; run `vcforge convert` first")

    available = {p.name.split(".")[0] for p in converted_dir.glob("*.env.vcft")}
    evaluated = [utt for utt in test_ids if utt in available]
    excluded = sorted((set(test_ids) ^ available))
    if excluded:
        logger.warning(f"{label}: excluded ids without a counterpart: {excluded}")

    scores = _parallel(config)(delayed(_evaluate_one)(utt, paths, config, converted_dir) for utt in evaluated)
    report = metrics.aggregate(label, scores, excluded)
    report_dir = paths.report_dir(label)
    metrics.write_report_text(report, report_dir / "report.txt")
    metrics.write_report_kv(report, report_dir / "report.kv")
    if write_csv:
        metrics.write_report_csv(report, report_dir / "report.csv")
    RunRegistry(paths.registry).record_evaluation(label, scores)
    logger.info(f"{label}: LSD {report.lsd_percent:.2f}% over {len(scores)} utterances")
    return report
