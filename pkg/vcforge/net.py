#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/net.py
Created: 2026-09-05 08:44:37 UTC

Description:
    Feed-forward network engine written directly against numpy: tanh hidden
    layers with a linear output, back-propagation with momentum SGD,
    sparse autoencoder pretraining and discriminative layer-wise pretraining.

    Model file (little-endian):
        magic "VCNN" | version u32 | layers u32
        | per layer: in u32, out u32, activation u32, weights out*in f8, biases out f8
        | has_normalizer u32 | input mean, input std, output mean, output std (f8)
'''

import logging
import struct
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config import TrainConfig
from vcforge.exceptions import FeatureFormatError, InputValidationError, TrainingError

# Get a logger for this module
logger = logging.getLogger(__name__)

NET_MAGIC = b"VCNN"
NET_VERSION = 1
ACTIVATIONS = ("tanh", "linear")
_NET_HEADER = struct.Struct("<4sII")
_LAYER_HEADER = struct.Struct("<III")
_U32 = struct.Struct("<I")
_MIN_STD = 1e-8

Gradients = List[Tuple[np.ndarray, np.ndarray]]

class _Params(NamedTuple):
    """Mutable view of one layer during training."""
    weights: np.ndarray
    bias: np.ndarray
    activation: str

@dataclass(frozen=True, eq=False)
class Layer:
    """Affine map followed by an activation; weights are out x in."""
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "tanh"

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if weights.ndim != 2 or bias.shape != (weights.shape[0],):
            raise InputValidationError(f"layer weights {weights.shape} and bias {bias.shape} do not match")
        if self.activation not in ACTIVATIONS:
            raise InputValidationError(f"unknown activation '{self.activation}'")
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-dimension z-score statistics for inputs and outputs."""
    input_mean: np.ndarray
    input_std: np.ndarray
    output_mean: np.ndarray
    output_std: np.ndarray

    @staticmethod
    def _stats(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        std = values.std(axis=0)
        return values.mean(axis=0), np.where(std > _MIN_STD, std, 1.0)

    @classmethod
    def fit(cls, inputs: np.ndarray, targets: np.ndarray) -> "Normalizer":
        return cls(*cls._stats(inputs), *cls._stats(targets))

    def refit_outputs(self, targets: np.ndarray) -> "Normalizer":
        mean, std = self._stats(targets)
        return replace(self, output_mean=mean, output_std=std)

    def normalize_inputs(self, inputs: np.ndarray) -> np.ndarray:
        return (inputs - self.input_mean) / self.input_std

    def normalize_targets(self, targets: np.ndarray) -> np.ndarray:
        return (targets - self.output_mean) / self.output_std

    def denormalize_outputs(self, outputs: np.ndarray) -> np.ndarray:
        return outputs * self.output_std + self.output_mean

@dataclass(frozen=True, eq=False)
class FeedForwardNet:
    """Chain of layers with tanh hidden activations and a linear output.

    Raises:
        InputValidationError: On an empty chain, mismatched layer dims or wrong activations.
    """
    layers: Tuple[Layer, ...]
    normalizer: Optional[Normalizer] = None

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise InputValidationError("a network needs at least one layer")
        for previous, current in zip(layers, layers[1:]):
            if current.input_dim != previous.output_dim:
                raise InputValidationError(f"layer dims do not chain: {previous.output_dim} -> {current.input_dim}")
        if any(layer.activation != "tanh" for layer in layers[:-1]) or layers[-1].activation != "linear":
            raise InputValidationError("hidden layers must be tanh and the output layer linear")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def dims(self) -> List[int]:
        return [self.input_dim] + [layer.output_dim for layer in self.layers]

    @property
    def n_parameters(self) -> int:
        return sum(layer.weights.size + layer.bias.size for layer in self.layers)

@dataclass
class TrainingHistory:
    """Per-epoch mean squared error of one training phase (normalized units)."""
    phase: str
    mse: List[float] = field(default_factory=list)
    validation_mse: List[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def epochs(self) -> int:
        return len(self.mse)

    @property
    def final_mse(self) -> Optional[float]:
        return self.mse[-1] if self.mse else None

"""=========================== CONSTRUCTION ==========================="""
def _glorot_layer(fan_in: int, fan_out: int, activation: str, rng: np.random.Generator) -> Layer:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Layer(rng.uniform(-limit, limit, size=(fan_out, fan_in)), np.zeros(fan_out), activation)

def init_random(dims: Sequence[int], seed: int = 0) -> FeedForwardNet:
    """Uniform Glorot-range weights and zero biases.

    Args:
        dims (Sequence[int]): [input, *hidden, output].
        seed (int): Generator seed.

    Raises:
        InputValidationError: If fewer than two dims are given or any is not positive.
    """
    dims = list(dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise InputValidationError(f"invalid layer dims {dims}")
    rng = np.random.default_rng(seed)
    n_layers = len(dims) - 1
    layers = [
        _glorot_layer(dims[i], dims[i + 1], "linear" if i == n_layers - 1 else "tanh", rng)
        for i in range(n_layers)
    ]
    return FeedForwardNet(tuple(layers))

"""=========================== FORWARD / BACKWARD ==========================="""
def _activations(layers: Sequence[Layer], inputs: np.ndarray) -> List[np.ndarray]:
    outputs = [inputs]
    for layer in layers:
        pre = outputs[-1] @ layer.weights.T + layer.bias
        outputs.append(np.tanh(pre) if layer.activation == "tanh" else pre)
    return outputs

def _check_inputs(net: FeedForwardNet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_dim:
        raise InputValidationError(f"input dim {x.shape[-1]} does not match network input {net.input_dim}")
    return x

def forward(net: FeedForwardNet, x: np.ndarray) -> np.ndarray:
    """Network output for one vector (in,) or a batch (N, in)."""
    x = _check_inputs(net, x)
    batch = np.atleast_2d(x)
    if net.normalizer is not None:
        batch = net.normalizer.normalize_inputs(batch)
    y = _activations(net.layers, batch)[-1]
    if net.normalizer is not None:
        y = net.normalizer.denormalize_outputs(y)
    return y[0] if x.ndim == 1 else y

def _backprop(layers: Sequence[Layer], inputs: np.ndarray, targets: np.ndarray, l1_lambda: float) -> Tuple[float, Gradients]:
    outputs = _activations(layers, inputs)
    error = outputs[-1] - targets
    loss = 0.5 * float(np.sum(error ** 2))
    if l1_lambda:
        loss += l1_lambda * sum(float(np.sum(np.abs(layer.weights))) for layer in layers)

    grads: Gradients = []
    delta = error
    for index in reversed(range(len(layers))):
        layer = layers[index]
        if layer.activation == "tanh":
            delta = delta * (1.0 - outputs[index + 1] ** 2)
        grad_w = delta.T @ outputs[index]
        if l1_lambda:
            grad_w = grad_w + l1_lambda * np.sign(layer.weights)
        grads.append((grad_w, delta.sum(axis=0)))
        if index > 0:
            delta = delta @ layer.weights
    grads.reverse()
    return loss, grads

def loss_and_gradients(net: FeedForwardNet, inputs: np.ndarray, targets: np.ndarray,
                       l1_lambda: float = 0.0) -> Tuple[float, Gradients]:
    """Summed objective 0.5*sum||y - t||^2 + l1_lambda*sum|W| and its exact gradients.

    Computed in the network's normalized space when a normalizer is attached.
    The L1 subgradient at zero is zero and biases are not penalized.

    Returns:
        Tuple[float, Gradients]: Loss and per-layer (dW, db).
    """
    inputs = np.atleast_2d(_check_inputs(net, inputs))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if targets.shape != (len(inputs), net.output_dim):
        raise InputValidationError(f"targets shape {targets.shape} does not match ({len(inputs)}, {net.output_dim})")
    if net.normalizer is not None:
        inputs = net.normalizer.normalize_inputs(inputs)
        targets = net.normalizer.normalize_targets(targets)
    return _backprop(net.layers, inputs, targets, l1_lambda)

"""=========================== TRAINING ==========================="""
def _mse(layers: Sequence[Layer], inputs: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((_activations(layers, inputs)[-1] - targets) ** 2))

def train(net: FeedForwardNet, inputs: np.ndarray, targets: np.ndarray, config: TrainConfig,
          phase: str = "finetune") -> Tuple[FeedForwardNet, TrainingHistory]:
    """Momentum SGD on the summed squared error (plus L1 when configured).

    Each minibatch applies v = momentum*v - learning_rate*grad/batch_rows and
    then adds v to the parameters. Rows are reshuffled every epoch with a
    generator seeded from config.seed. With config.normalize the input
    statistics are fitted once (reused if the net already has them) and the
    output statistics are fitted to `targets`.

    Args:
        net (FeedForwardNet): Starting parameters; never modified.
        inputs (np.ndarray): N x input_dim rows.
        targets (np.ndarray): N x output_dim rows.
        config (TrainConfig): Optimizer settings.
        phase (str): Name recorded in the history and logs.

    Returns:
        Tuple[FeedForwardNet, TrainingHistory]: Trained net and per-epoch MSE.

    Raises:
        InputValidationError: On row or dim mismatches.
        TrainingError: If the loss becomes non-finite.
    """
    inputs = np.atleast_2d(_check_inputs(net, inputs))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if len(inputs) != len(targets) or len(inputs) == 0:
        raise InputValidationError(f"{len(inputs)} input rows vs {len(targets)} target rows")
    if targets.shape[1] != net.output_dim:
        raise InputValidationError(f"target dim {targets.shape[1]} does not match network output {net.output_dim}")

    normalizer = net.normalizer
    if config.normalize:
        normalizer = normalizer.refit_outputs(targets) if normalizer else Normalizer.fit(inputs, targets)
    if normalizer is not None:
        inputs = normalizer.normalize_inputs(inputs)
        targets = normalizer.normalize_targets(targets)

    rng = np.random.default_rng(config.seed)
    train_rows = np.arange(len(inputs))
    valid_rows = np.array([], dtype=int)
    if config.validation_fraction > 0:
        shuffled = rng.permutation(len(inputs))
        n_valid = int(len(inputs) * config.validation_fraction)
        train_rows, valid_rows = np.sort(shuffled[n_valid:]), np.sort(shuffled[:n_valid])

    weights = [layer.weights.copy() for layer in net.layers]
    biases = [layer.bias.copy() for layer in net.layers]
    activations = [layer.activation for layer in net.layers]
    velocity = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(weights, biases)]

    def current_layers() -> List[_Params]:
        return [_Params(w, b, a) for w, b, a in zip(weights, biases, activations)]

    history = TrainingHistory(phase)
    best: Optional[Tuple[float, List[Layer]]] = None
    stale = 0
    for epoch in range(config.max_epochs):
        order = train_rows[rng.permutation(len(train_rows))]
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = _backprop(current_layers(), inputs[batch], targets[batch], config.l1_lambda)
            if not np.isfinite(loss):
                error_msg = f"{phase}: non-finite loss at epoch {epoch + 1}, batch starting at row {start}"
                logger.error(error_msg)
                raise TrainingError(error_msg)
            scale = config.learning_rate / len(batch)
            for index, (grad_w, grad_b) in enumerate(grads):
                vel_w, vel_b = velocity[index]
                vel_w *= config.momentum
                vel_w -= scale * grad_w
                vel_b *= config.momentum
                vel_b -= scale * grad_b
                weights[index] += vel_w
                biases[index] += vel_b

        layers = current_layers()
        history.mse.append(_mse(layers, inputs[train_rows], targets[train_rows]))
        logger.debug(f"{phase} epoch {epoch + 1}/{config.max_epochs}: mse {history.mse[-1]:.6f}")
        if len(valid_rows):
            valid_mse = _mse(layers, inputs[valid_rows], targets[valid_rows])
            history.validation_mse.append(valid_mse)
            if best is None or valid_mse < best[0]:
                best, stale = (valid_mse, [Layer(*params) for params in layers]), 0
            else:
                stale += 1
                if config.patience is not None and stale >= config.patience:
                    history.stopped_early = True
                    logger.info(f"{phase}: early stop at epoch {epoch + 1}, best validation mse {best[0]:.6f}")
                    break

    if best is not None and history.stopped_early:
        final_layers = best[1]
    else:
        final_layers = [Layer(*params) for params in current_layers()]
    logger.info(f"{phase}: {history.epochs} epochs, final mse {history.final_mse:.6f}")
    return FeedForwardNet(tuple(final_layers), normalizer), history

def pretrain_autoencoder(net: FeedForwardNet, source_inputs: np.ndarray, config: TrainConfig,
                         static_columns: Optional[Sequence[int]] = None) -> Tuple[FeedForwardNet, TrainingHistory]:
    """Train the conversion architecture to reconstruct source frames under an L1 weight penalty.

    The reconstruction target is the static part of each input row (by
    default its first output_dim columns). The returned net keeps the same
    architecture and no penalty state; fine-tuning proceeds without L1.
    """
    source_inputs = np.atleast_2d(_check_inputs(net, source_inputs))
    columns = list(static_columns) if static_columns is not None else list(range(net.output_dim))
    if len(columns) != net.output_dim or max(columns) >= net.input_dim:
        raise InputValidationError(
            f"reconstruction target of {len(columns)} columns does not fit a {net.input_dim}->{net.output_dim} net")
    if config.l1_lambda == 0:
        message = "l1_lambda is 0: autoencoder pretraining degenerates to a plain autoencoder"
        warnings.warn(message, UserWarning, stacklevel=2)
        logger.warning(message)
    return train(net, source_inputs, source_inputs[:, columns], config, phase="pretrain-autoencoder")

def pretrain_dlp(net: FeedForwardNet, inputs: np.ndarray, targets: np.ndarray, config: TrainConfig,
                 stage_epochs: int) -> Tuple[FeedForwardNet, List[TrainingHistory]]:
    """Discriminative layer-wise pretraining.

    Stage s trains the first s hidden layers topped by an output layer
    against the real targets for `stage_epochs`. Earlier stages use a
    temporary linear output layer; the last stage uses the net's own output
    layer, so the final architecture equals the input architecture.
    """
    hidden = list(net.layers[:-1])
    stage_config = config.model_copy(update={"max_epochs": stage_epochs, "patience": None})
    if not hidden:
        trained, history = train(net, inputs, targets, stage_config, phase="dlp-stage-1")
        return trained, [history]

    histories: List[TrainingHistory] = []
    normalizer = net.normalizer
    current = net
    for stage in range(1, len(hidden) + 1):
        if stage == len(hidden):
            top = net.layers[-1]
        else:
            rng = np.random.default_rng(config.seed + stage)
            top = _glorot_layer(hidden[stage - 1].output_dim, net.output_dim, "linear", rng)
        staged = FeedForwardNet(tuple(hidden[:stage]) + (top,), normalizer)
        current, history = train(staged, inputs, targets, stage_config, phase=f"dlp-stage-{stage}")
        hidden[:stage] = current.layers[:stage]
        normalizer = current.normalizer
        histories.append(history)
    return current, histories

"""=========================== PERSISTENCE ==========================="""
def save_net(net: FeedForwardNet, path: Union[str, Path]) -> None:
    parts = [_NET_HEADER.pack(NET_MAGIC, NET_VERSION, len(net.layers))]
    for layer in net.layers:
        parts.append(_LAYER_HEADER.pack(layer.input_dim, layer.output_dim, ACTIVATIONS.index(layer.activation)))
        parts.append(layer.weights.astype("<f8").tobytes())
        parts.append(layer.bias.astype("<f8").tobytes())
    parts.append(_U32.pack(int(net.normalizer is not None)))
    if net.normalizer is not None:
        stats = net.normalizer
        for array in (stats.input_mean, stats.input_std, stats.output_mean, stats.output_std):
            parts.append(np.asarray(array, dtype="<f8").tobytes())
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(b"".join(parts))
    logger.debug(f"Saved network {net.dims} to {path}")

def load_net(path: Union[str, Path]) -> FeedForwardNet:
    """Read a network written by save_net.

    Raises:
        FeatureFormatError: On bad magic, version, truncation or trailing bytes.
    """
    raw = Path(path).read_bytes()

    def take(offset: int, count: int) -> np.ndarray:
        if offset + 8 * count > len(raw):
            raise FeatureFormatError(f"{path}: truncated network file")
        return np.frombuffer(raw, dtype="<f8", count=count, offset=offset).copy()

    try:
        magic, version, n_layers = _NET_HEADER.unpack_from(raw)
        if magic != NET_MAGIC or version != NET_VERSION:
            raise FeatureFormatError(f"{path}: not a version {NET_VERSION} network file")
        offset = _NET_HEADER.size
        layers = []
        for _ in range(n_layers):
            n_in, n_out, tag = _LAYER_HEADER.unpack_from(raw, offset)
            offset += _LAYER_HEADER.size
            if tag >= len(ACTIVATIONS):
                raise FeatureFormatError(f"{path}: unknown activation tag {tag}")
            weights = take(offset, n_in * n_out).reshape(n_out, n_in)
            offset += 8 * n_in * n_out
            bias = take(offset, n_out)
            offset += 8 * n_out
            layers.append(Layer(weights, bias, ACTIVATIONS[tag]))
        (has_normalizer,) = _U32.unpack_from(raw, offset)
        offset += _U32.size
    except struct.error as e:
        raise FeatureFormatError(f"{path}: truncated network file") from e

    normalizer = None
    if has_normalizer:
        n_in, n_out = layers[0].input_dim, layers[-1].output_dim
        arrays = []
        for count in (n_in, n_in, n_out, n_out):
            arrays.append(take(offset, count))
            offset += 8 * count
        normalizer = Normalizer(*arrays)
    if offset != len(raw):
        raise FeatureFormatError(f"{path}: unexpected trailing bytes")
    try:
        return FeedForwardNet(tuple(layers), normalizer)
    except InputValidationError as e:
        raise FeatureFormatError(f"{path}: {e}") from e
