#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/gmm.py
Created: 2026-09-04 10:27:05 UTC

Description:
    Joint-density GMM baseline. EM fits a full-covariance mixture over
    stacked [source, target] vectors; conversion is the conditional
    expectation of the target given a source vector.

    Model file (little-endian):
        magic "VCGM" | version u32 | K u32 | d u32
        | weights K*f8 | means K*2d*f8 | covariances K*2d*2d*f8
'''

import logging
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from config import GmmConfig
from vcforge.exceptions import FeatureFormatError, InputValidationError, NumericError, TrainingError

# Get a logger for this module
logger = logging.getLogger(__name__)

GMM_MAGIC = b"VCGM"
GMM_VERSION = 1
_GMM_HEADER = struct.Struct("<4sIII")
_LOG_2PI = np.log(2 * np.pi)
_FLOOR_ATTEMPTS = 8

@dataclass(frozen=True, eq=False)
class JointGmmModel:
    """Mixture over joint vectors z = [x; y] with x, y of dimension d.

    Attributes:
        weights (np.ndarray): K mixture weights, positive, summing to 1.
        means (np.ndarray): K x 2d joint means.
        covariances (np.ndarray): K x 2d x 2d symmetric joint covariances.

    Raises:
        InputValidationError: On inconsistent shapes, invalid weights or asymmetric covariances.
    """
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        means = np.array(self.means, dtype=np.float64)
        covariances = np.array(self.covariances, dtype=np.float64)
        k = len(weights)
        if k < 1 or means.ndim != 2 or means.shape[0] != k or means.shape[1] % 2:
            raise InputValidationError(f"inconsistent GMM shapes: weights {weights.shape}, means {means.shape}")
        if covariances.shape != (k, means.shape[1], means.shape[1]):
            raise InputValidationError(f"covariances shape {covariances.shape} does not match means {means.shape}")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-10:
            raise InputValidationError("mixture weights must be positive and sum to 1")
        if not np.allclose(covariances, np.transpose(covariances, (0, 2, 1)), rtol=0, atol=1e-10):
            raise InputValidationError("joint covariances must be symmetric")
        for array in (weights, means, covariances):
            array.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covariances)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        """Dimension d of the source (and target) vectors."""
        return self.means.shape[1] // 2

    @property
    def source_means(self) -> np.ndarray:
        return self.means[:, :self.dim]

    @property
    def target_means(self) -> np.ndarray:
        return self.means[:, self.dim:]

    @property
    def sigma_xx(self) -> np.ndarray:
        return self.covariances[:, :self.dim, :self.dim]

    @property
    def sigma_xy(self) -> np.ndarray:
        return self.covariances[:, :self.dim, self.dim:]

    @cached_property
    def _source_cholesky(self) -> np.ndarray:
        factors = np.empty_like(self.sigma_xx)
        for k in range(self.n_components):
            try:
                factors[k] = cholesky(self.sigma_xx[k], lower=True)
            except LinAlgError as e:
                raise NumericError(f"source covariance of component {k} is singular") from e
        return factors

    @cached_property
    def regression_matrices(self) -> np.ndarray:
        """Per-component Sigma_yx Sigma_xx^-1, shape K x d x d."""
        return np.stack([
            cho_solve((self._source_cholesky[k], True), self.sigma_xy[k]).T
            for k in range(self.n_components)
        ])

@dataclass
class EmResult:
    """Fitted model with its per-iteration log-likelihood history."""
    model: JointGmmModel
    log_likelihoods: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def n_iter(self) -> int:
        return len(self.log_likelihoods)

"""=========================== TRAINING ==========================="""
def _factor(covariance: np.ndarray, floor: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Floor the diagonal where needed and return (covariance, Cholesky factor).

    The floor is escalated tenfold while the matrix stays non positive-definite.
    """
    covariance = (covariance + covariance.T) / 2.0
    diag = np.diag_indices_from(covariance)
    covariance[diag] = np.maximum(covariance[diag], floor)
    for attempt in range(_FLOOR_ATTEMPTS):
        try:
            return covariance, cholesky(covariance, lower=True)
        except LinAlgError:
            covariance[diag] += floor * 10.0 ** attempt
    raise TrainingError("covariance stays singular after exhausting the variance floor")

def _m_step(z: np.ndarray, resp: np.ndarray, floor: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    nk = resp.sum(axis=0) + 10 * np.finfo(np.float64).eps
    weights = nk / nk.sum()
    means = resp.T @ z / nk[:, None]
    covariances = np.empty((len(nk), z.shape[1], z.shape[1]))
    factors = np.empty_like(covariances)
    for k in range(len(nk)):
        diff = z - means[k]
        covariances[k], factors[k] = _factor((resp[:, k, None] * diff).T @ diff / nk[k], floor)
    return weights, means, covariances, factors

def _log_gaussian(z: np.ndarray, mean: np.ndarray, factor: np.ndarray) -> np.ndarray:
    solved = solve_triangular(factor, (z - mean).T, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(factor)))
    return -0.5 * (z.shape[1] * _LOG_2PI + log_det + np.sum(solved ** 2, axis=0))

def _e_step(z: np.ndarray, weights: np.ndarray, means: np.ndarray, factors: np.ndarray) -> Tuple[float, np.ndarray]:
    log_joint = np.column_stack([
        np.log(weights[k]) + _log_gaussian(z, means[k], factors[k]) for k in range(len(weights))
    ])
    log_norm = logsumexp(log_joint, axis=1)
    return float(log_norm.sum()), np.exp(log_joint - log_norm[:, None])

def em_train(source: np.ndarray, target: np.ndarray, n_components: int, config: GmmConfig) -> EmResult:
    """Fit a joint-density GMM by EM.

    Initialization is k-means++ seeding on the joint vectors followed by one
    hard assignment. Iteration stops when the relative log-likelihood gain
    drops below config.tol or after config.max_iter iterations.

    Args:
        source (np.ndarray): N x d source frames.
        target (np.ndarray): N x d aligned target frames.
        n_components (int): Mixture size K.
        config (GmmConfig): Iteration limits, tolerance, variance floor and seed.

    Returns:
        EmResult: Model plus log-likelihood history.

    Raises:
        InputValidationError: On mismatched row counts or dims.
        TrainingError: If K <= 0, there are fewer distinct rows than components,
            or a covariance cannot be made positive-definite.
    """
    source, target = np.atleast_2d(source), np.atleast_2d(target)
    if source.shape != target.shape:
        raise InputValidationError(f"source {source.shape} and target {target.shape} must have equal shapes")
    if n_components <= 0:
        raise TrainingError(f"number of components must be positive, got {n_components}")
    z = np.hstack([source, target])
    if len(z) < n_components:
        raise TrainingError(f"{len(z)} rows cannot support {n_components} components")
    if n_components > 1 and len(np.unique(z, axis=0)) < n_components:
        raise TrainingError(f"data has fewer than {n_components} distinct rows")

    variance = z.var(axis=0)
    floor = config.variance_floor * np.where(variance > 0, variance, 1.0)

    centres, _ = kmeans_plusplus(z, n_clusters=n_components, random_state=config.seed)
    labels = np.argmin(cdist(z, centres, "sqeuclidean"), axis=1)
    resp = np.eye(n_components)[labels]
    weights, means, covariances, factors = _m_step(z, resp, floor)

    history: List[float] = []
    converged = False
    for iteration in range(config.max_iter):
        log_likelihood, resp = _e_step(z, weights, means, factors)
        history.append(log_likelihood)
        logger.debug(f"EM iteration {iteration}: log-likelihood {log_likelihood:.6f}")
        if len(history) > 1 and history[-1] - history[-2] < config.tol * abs(history[-2]):
            converged = True
            break
        weights, means, covariances, factors = _m_step(z, resp, floor)

    logger.info(f"EM finished after {len(history)} iterations (K={n_components}, converged={converged})")
    return EmResult(JointGmmModel(weights, means, covariances), history, converged)

"""=========================== CONVERSION ==========================="""
def _check_source(model: JointGmmModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dim:
        raise InputValidationError(f"source vectors have dim {x.shape[1]}, model expects {model.dim}")
    return x

def posteriors(model: JointGmmModel, x: np.ndarray) -> np.ndarray:
    """Component posteriors p_k(x) under the source marginals, shape N x K.

    Raises:
        NumericError: If a source covariance is singular.
    """
    x = _check_source(model, x)
    log_joint = np.column_stack([
        np.log(model.weights[k]) + _log_gaussian(x, model.source_means[k], model._source_cholesky[k])
        for k in range(model.n_components)
    ])
    return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))

def convert_matrix(model: JointGmmModel, x: np.ndarray) -> np.ndarray:
    """Minimum mean-square-error conversion of every row of x."""
    x = _check_source(model, x)
    probs = posteriors(model, x)
    converted = np.zeros_like(x)
    for k in range(model.n_components):
        expected = model.target_means[k] + (x - model.source_means[k]) @ model.regression_matrices[k].T
        converted += probs[:, k, None] * expected
    return converted

def convert(model: JointGmmModel, x: np.ndarray) -> np.ndarray:
    """Convert one source vector (d,) to its expected target vector (d,)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputValidationError("convert takes a single vector; use convert_matrix for batches")
    return convert_matrix(model, x)[0]

"""=========================== PERSISTENCE ==========================="""
def save_gmm(model: JointGmmModel, path: Union[str, Path]) -> None:
    header = _GMM_HEADER.pack(GMM_MAGIC, GMM_VERSION, model.n_components, model.dim)
    body = b"".join(a.astype("<f8").tobytes() for a in (model.weights, model.means, model.covariances))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(header + body)
    logger.debug(f"Saved GMM (K={model.n_components}, d={model.dim}) to {path}")

def load_gmm(path: Union[str, Path]) -> JointGmmModel:
    """Read a model written by save_gmm.

    Raises:
        FeatureFormatError: On bad magic, version or size.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _GMM_HEADER.size:
        raise FeatureFormatError(f"{path}: file shorter than GMM header")
    magic, version, k, d = _GMM_HEADER.unpack_from(raw)
    if magic != GMM_MAGIC or version != GMM_VERSION:
        raise FeatureFormatError(f"{path}: not a version {GMM_VERSION} GMM file")
    counts = [k, k * 2 * d, k * 4 * d * d]
    if len(raw) != _GMM_HEADER.size + 8 * sum(counts):
        raise FeatureFormatError(f"{path}: size does not match K={k}, d={d}")
    values = np.frombuffer(raw, dtype="<f8", offset=_GMM_HEADER.size)
    weights, means, covariances = np.split(values, np.cumsum(counts)[:-1])
    try:
        return JointGmmModel(weights, means.reshape(k, 2 * d), covariances.reshape(k, 2 * d, 2 * d))
    except InputValidationError as e:
        raise FeatureFormatError(f"{path}: {e}") from e
