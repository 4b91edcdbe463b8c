"""Reference post-hoc OOD scorers: MDS, KNN, and logit-based methods.

The logit-based scores (MSP, Energy, MLS) need a classifier head; since
the toolkit only sees embeddings, a small multinomial logistic head is
trained here by deterministic full-batch gradient descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import as_f64, kth_nn_dist
from .data import EmbeddingSet, ScoreVector
from .exceptions import BadK, Degenerate, DimMismatch, EmptyClass


@dataclass(frozen=True)
class GaussianModel:
    """Class-conditional Gaussians with a shared (pooled) covariance."""

    class_means: np.ndarray  # (C, D)
    pooled_precision: np.ndarray  # (D, D)
    ridge_epsilon: float

    def to_dict(self) -> dict:
        return {
            "kind": "gaussian",
            "class_means": [row for row in self.class_means],
            "pooled_precision": [row for row in self.pooled_precision],
            "ridge_epsilon": self.ridge_epsilon,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianModel":
        return cls(
            class_means=np.asarray(doc["class_means"], dtype=np.float64),
            pooled_precision=np.asarray(doc["pooled_precision"], dtype=np.float64),
            ridge_epsilon=float(doc["ridge_epsilon"]),
        )


@dataclass(frozen=True)
class HeadConfig:
    learning_rate: float = 0.1
    l2_strength: float = 1e-4
    iterations: int = 500


@dataclass(frozen=True)
class LinearHead:
    weights: np.ndarray  # (C, D)
    bias: np.ndarray  # (C,)
    config: HeadConfig = HeadConfig()

    def logits(self, feats: np.ndarray) -> np.ndarray:
        if feats.shape[1] != self.weights.shape[1]:
            raise DimMismatch(self.weights.shape[1], feats.shape[1])
        return as_f64(feats) @ self.weights.T + self.bias

    def to_dict(self) -> dict:
        return {
            "kind": "linear_head",
            "weights": [row for row in self.weights],
            "bias": self.bias,
            "config": {
                "learning_rate": self.config.learning_rate,
                "l2_strength": self.config.l2_strength,
                "iterations": self.config.iterations,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearHead":
        cfg = doc["config"]
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            bias=np.asarray(doc["bias"], dtype=np.float64),
            config=HeadConfig(cfg["learning_rate"], cfg["l2_strength"], cfg["iterations"]),
        )


def mds_fit(train: EmbeddingSet) -> GaussianModel:
    """Per-class means with a pooled MLE covariance, ridge-regularized.

    The ridge is scale-aware: epsilon = 1e-6 * trace(cov)/D, floored at
    1e-12, so unit-normalized embeddings with tiny covariances are not
    swamped by a fixed constant.
    """
    feats = as_f64(train.features)
    n, d = feats.shape
    if n <= train.class_count:
        raise Degenerate(f"need N > C for a pooled covariance (N={n}, C={train.class_count})")
    means = np.empty((train.class_count, d))
    centered = np.empty_like(feats)
    for c in range(train.class_count):
        mask = train.labels == c
        if not mask.any():
            raise EmptyClass(c)
        means[c] = feats[mask].mean(axis=0)
        centered[mask] = feats[mask] - means[c]
    cov = (centered.T @ centered) / n
    eps = max(1e-6 * float(np.trace(cov)) / d, 1e-12)
    try:
        precision = np.linalg.inv(cov + eps * np.eye(d))
    except np.linalg.LinAlgError as exc:
        raise Degenerate(f"covariance not invertible after ridging: {exc}") from exc
    precision = 0.5 * (precision + precision.T)
    if not np.all(np.isfinite(precision)):
        raise Degenerate("non-finite precision matrix")
    return GaussianModel(class_means=means, pooled_precision=precision, ridge_epsilon=eps)


def mds_score(model: GaussianModel, query: EmbeddingSet) -> ScoreVector:
    """Negated minimum squared Mahalanobis distance over class means."""
    feats = as_f64(query.features)
    if feats.shape[1] != model.class_means.shape[1]:
        raise DimMismatch(model.class_means.shape[1], feats.shape[1])
    best = np.full(feats.shape[0], np.inf)
    for mu in model.class_means:
        diff = feats - mu
        d2 = np.einsum("ij,jk,ik->i", diff, model.pooled_precision, diff)
        best = np.minimum(best, d2)
    return ScoreVector(method="mds", scores=-best)


def knn_score(train: EmbeddingSet, query: EmbeddingSet, k: int = 50) -> ScoreVector:
    """Negated Euclidean distance to the k-th nearest training row.

    k is capped at the training size; the paper gives no value, so the
    default of 50 is a plain convention surfaced as a flag upstream.
    """
    if k < 1:
        raise BadK(f"k={k} must be >= 1")
    k = min(k, train.n)
    if train.dim != query.dim:
        raise DimMismatch(train.dim, query.dim)
    dists = kth_nn_dist(as_f64(train.features), as_f64(query.features), k)
    return ScoreVector(method=f"knn-{k}", scores=-dists)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def head_train(train: EmbeddingSet, config: HeadConfig = HeadConfig()) -> LinearHead:
    """Multinomial logistic regression by full-batch gradient descent.

    Zero init, fixed step size, L2 on the weights (not the bias), all in
    float64: deterministic for a given (data, config). The regularized
    loss is checked to be non-increasing across iterations.
    """
    feats = as_f64(train.features)
    n, d = feats.shape
    c = train.class_count
    counts = np.bincount(train.labels, minlength=c)
    if (counts == 0).any():
        raise EmptyClass(int(np.argmin(counts)))
    onehot = np.zeros((n, c))
    onehot[np.arange(n), train.labels] = 1.0
    weights = np.zeros((c, d))
    bias = np.zeros(c)
    lam = config.l2_strength
    prev_loss = np.inf
    for _ in range(config.iterations):
        logits = feats @ weights.T + bias
        probs = _softmax_rows(logits)
        log_probs = logits - logits.max(axis=1, keepdims=True)
        log_probs -= np.log(np.exp(log_probs).sum(axis=1, keepdims=True))
        loss = -np.mean(log_probs[np.arange(n), train.labels]) + 0.5 * lam * np.sum(weights**2)
        assert loss <= prev_loss + 1e-9, "training loss increased"
        prev_loss = loss
        grad = probs - onehot
        weights -= config.learning_rate * (grad.T @ feats / n + lam * weights)
        bias -= config.learning_rate * grad.mean(axis=0)
    return LinearHead(weights=weights, bias=bias, config=config)


def logit_scores(head: LinearHead, query: EmbeddingSet, method: str) -> ScoreVector:
    """MSP, Energy, or MLS from the head's logits; all higher = more ID."""
    logits = head.logits(query.features)
    name = method.lower()
    if name == "msp":
        scores = _softmax_rows(logits).max(axis=1)
    elif name == "energy":
        m = logits.max(axis=1)
        scores = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    elif name == "mls":
        scores = logits.max(axis=1)
    else:
        raise ValueError(f"unknown logit method {method!r}")
    return ScoreVector(method=name, scores=scores)
