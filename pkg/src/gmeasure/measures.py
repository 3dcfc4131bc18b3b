"""Scalar information quantities of the G theory, reported in bits.

Includes the pointwise G measure, semantic and Shannon KL information,
semantic mutual information with its entropy breakdown, the Gaussian
closed form ``I_max - d_bar``, and the InfoNCE loss viewed as negative
semantic information (nats).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateTruthError, ParameterError, SupportError
from .prob_core import (
    LN2,
    TRUTH_EPS,
    Dist,
    SemanticChannel,
    ShannonChannel,
    TruthFn,
    _check_same_grid,
    logical_probability,
)

LOG2E = 1.0 / LN2


def semantic_info_point(T_at_x: float, T_logical: float) -> float:
    """G measure ``log2(T(theta_j|x) / T(theta_j))``; negative for a misleading label."""
    if T_logical <= 0:
        raise DegenerateTruthError("logical probability must be positive")
    return float(np.log2(max(T_at_x, TRUTH_EPS) / T_logical))


def semantic_kl(actual: Dist, T: TruthFn, P: Dist) -> float:
    """Semantic KL information ``sum_i actual(x_i) log2[T(x_i)/T(theta_j)]``."""
    _check_same_grid(actual, T, P)
    lp = logical_probability(T, P)
    a = actual.weights
    pos = a > 0
    logt = np.log(np.maximum(T.values[pos], TRUTH_EPS))
    return float(a[pos] @ logt - np.log(lp)) / LN2


def shannon_kl(actual: Dist, P: Dist) -> float:
    """KL information ``sum_i actual log2(actual/P)`` (0 log 0 = 0)."""
    _check_same_grid(actual, P)
    a, p = actual.weights, P.weights
    pos = a > 0
    if np.any(p[pos] <= 0):
        raise SupportError("actual distribution has mass where the prior has none")
    return float(a[pos] @ np.log(a[pos] / p[pos])) / LN2


@dataclass(frozen=True)
class InfoBreakdown:
    """Semantic mutual information and its parts, all in bits."""

    semantic_mutual: float
    generalized_entropy: float
    fuzzy_entropy: float
    shannon_mutual: float


def shannon_mutual_info(P: Dist, channel: ShannonChannel) -> float:
    """Shannon ``I(X;Y)`` in bits for prior ``P`` and channel ``P(y|x)``."""
    _check_same_grid(P, channel)
    joint = P.weights[:, None] * channel.matrix
    py = joint.sum(axis=0)
    pos = joint > 0
    # log P(y|x) - log P(y) rather than joint/outer, which underflows for tiny entries
    log_ratio = np.log(channel.matrix[pos]) - np.log(np.broadcast_to(py, joint.shape)[pos])
    return float(np.sum(joint[pos] * log_ratio)) / LN2


def mutual_info_pair(P: Dist, channel: ShannonChannel, sem: SemanticChannel) -> InfoBreakdown:
    """Semantic mutual information of ``sem`` under the joint ``P(x) P(y|x)``.

    ``SMI = H(Y_theta) - H(Y_theta|X)`` with the generalized entropy
    ``-sum_j P(y_j) log2 T(theta_j)`` and the fuzzy entropy
    ``-sum_ij P(x_i, y_j) log2 T(theta_j|x_i)``.
    """
    _check_same_grid(P, channel, sem)
    if channel.n_labels != sem.n_labels:
        raise ParameterError(
            f"channel has {channel.n_labels} labels, semantic channel has {sem.n_labels}"
        )
    truth = sem.matrix
    logical = P.weights @ truth
    if np.any(logical <= 0):
        raise DegenerateTruthError(
            f"labels {np.flatnonzero(logical <= 0).tolist()} have zero logical probability"
        )
    joint = P.weights[:, None] * channel.matrix
    py = joint.sum(axis=0)

    h_gen = float(-(py @ np.log(logical))) / LN2
    pos = joint > 0
    h_fuzzy = float(-np.sum(joint[pos] * np.log(np.maximum(truth[pos], TRUTH_EPS)))) / LN2
    return InfoBreakdown(
        semantic_mutual=h_gen - h_fuzzy,
        generalized_entropy=h_gen,
        fuzzy_entropy=h_fuzzy,
        shannon_mutual=shannon_mutual_info(P, channel),
    )


def gaussian_semantic_info(P: Dist, joint, centers, sigmas) -> float:
    """Closed form ``I_max - d_bar`` for Gaussian truth functions, in bits.

    Independent of :func:`mutual_info_pair`: the fuzzy entropy is computed as
    the average quadratic distortion ``(x - x_j)^2 / (2 sigma_j^2)`` rather
    than from logs of truth values.
    """
    x = P.grid.points
    joint = np.asarray(joint, dtype=float)
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    if joint.ndim == 1:
        joint = joint[:, None]
    if joint.shape != (x.size, centers.size) or sigmas.shape != centers.shape:
        raise ParameterError("joint must be (n_x, n_labels) matching centers and sigmas")
    if np.any(sigmas <= 0):
        raise ParameterError("gaussian sigmas must be positive")

    sq = (x[:, None] - centers[None, :]) ** 2 / (2.0 * sigmas[None, :] ** 2)
    logical = P.weights @ np.exp(-sq)
    if np.any(logical <= 0):
        raise DegenerateTruthError("gaussian truth function has zero logical probability")
    py = joint.sum(axis=0)
    i_max = float(-(py @ np.log2(logical)))
    d_bar = float(np.sum(joint * sq)) * LOG2E
    return i_max - d_bar


@dataclass(frozen=True)
class SimilaritySet:
    """Similarities ``q.k_i`` of a query against K+1 keys, one of them positive."""

    similarities: np.ndarray
    temperature: float
    positive_index: int

    def __post_init__(self):
        sims = np.array(self.similarities, dtype=float)
        sims.setflags(write=False)
        if sims.ndim != 1 or sims.size < 1 or not np.all(np.isfinite(sims)):
            raise ParameterError("similarities must be a finite 1-D vector")
        if not self.temperature > 0:
            raise ParameterError("temperature must be positive")
        if not 0 <= self.positive_index < sims.size:
            raise ParameterError("positive_index out of range")
        object.__setattr__(self, "similarities", sims)


def softmax_semantic_info(ss: SimilaritySet) -> tuple[float, float]:
    """InfoNCE loss and the semantic information of the positive key, in nats.

    Returns ``(loss, info)`` with ``info = -loss``.
    """
    z = ss.similarities / ss.temperature
    loss = float(logsumexp(z) - z[ss.positive_index])
    return loss, -loss


def softmax_info_via_distortion(ss: SimilaritySet) -> float:
    """Semantic information of the positive key via ``d(q,k_i) = (m - q.k_i)/tau``.

    Truth values ``exp(-d)`` are at most 1; the log of their normaliser is
    taken in log-space so far-away keys cannot underflow it.
    """
    m = ss.similarities.max()
    d = (m - ss.similarities) / ss.temperature
    return float(-d[ss.positive_index] - logsumexp(-d))
