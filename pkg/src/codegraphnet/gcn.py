"""One-round graph convolution over the line chain.

The propagation is: linear map of per-line features, aggregation through the
adjacency matrix, ReLU, then a mean over nodes producing one embedding per
snippet. Exact analytic gradients are provided so the weight matrix can be
trained with a throwaway softmax head before being frozen for the
downstream classifier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, TrainingError, ValidationError
from .util import rng

logger = logging.getLogger(__name__)


@dataclass
class GcnParams:
    """Weight matrix and bias of the linear map preceding aggregation."""

    W: np.ndarray
    b: np.ndarray

    @property
    def d_in(self) -> int:
        return self.W.shape[0]

    @property
    def d_out(self) -> int:
        return self.W.shape[1]


@dataclass
class PropagationTrace:
    """Intermediate matrices of one forward pass, kept for tests and explanations."""

    x_prime: np.ndarray    # after the linear map
    x_dprime: np.ndarray   # after aggregation through A
    x_tprime: np.ndarray   # after ReLU


@dataclass
class FinalEmbedding:
    """Column mean of the activated features, over all n nodes."""

    h_final: np.ndarray
    n_nodes: int


@dataclass
class GcnTrainConfig:
    mode: str = "trained"           # "fixed" or "trained"
    learning_rate: float = 0.01
    epochs: int = 100
    l2: float = 1e-4
    seed: int = 0
    n_classes: int = 5
    d_out: int = 128

    def __post_init__(self):
        if self.mode not in ("fixed", "trained"):
            raise ValidationError(f"unknown gcn mode {self.mode!r}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValidationError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2 < 0.0:
            raise ValidationError(f"l2 must be >= 0, got {self.l2}")


@dataclass
class GcnTrainTrace:
    """Per-epoch losses and the temporary head's final training accuracy."""

    losses: list[float] = field(default_factory=list)
    head_train_accuracy: float = 0.0


def init_params(d_in: int, d_out: int, seed: int) -> GcnParams:
    """Uniform initialization in +/- sqrt(6 / (d_in + d_out)); zero bias."""
    if d_in < 1 or d_out < 1:
        raise ValidationError(f"dimensions must be >= 1, got d_in={d_in}, d_out={d_out}")
    limit = np.sqrt(6.0 / (d_in + d_out))
    w = rng(seed).uniform(-limit, limit, size=(d_in, d_out))
    return GcnParams(W=w, b=np.zeros(d_out))


def forward(params: GcnParams, X: np.ndarray, A: np.ndarray) -> tuple[FinalEmbedding, PropagationTrace]:
    """Run the propagation chain on an n-by-d_in feature matrix.

    Returns the pooled snippet embedding together with the full trace
    (post-linear, post-aggregation, post-activation matrices).
    """
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    _check_shapes(params, X, A)
    x_prime = X @ params.W + params.b
    x_dprime = A @ x_prime
    x_tprime = np.maximum(x_dprime, 0.0)
    h_final = x_tprime.mean(axis=0)
    trace = PropagationTrace(x_prime=x_prime, x_dprime=x_dprime, x_tprime=x_tprime)
    return FinalEmbedding(h_final=h_final, n_nodes=X.shape[0]), trace


def gradient(
    params: GcnParams, X: np.ndarray, A: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of <h_final, upstream> w.r.t. W, b and X.

    The ReLU subgradient at exactly zero is taken as zero.
    """
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    _check_shapes(params, X, A)
    if upstream.shape != (params.d_out,):
        raise ShapeError(f"upstream has shape {upstream.shape}, expected ({params.d_out},)")
    n = X.shape[0]
    x_dprime = A @ (X @ params.W + params.b)
    # d<h,u>/dX''' is u/n in every row; ReLU gates it where x'' <= 0.
    d_dprime = np.tile(upstream / n, (n, 1)) * (x_dprime > 0.0)
    d_prime = A.T @ d_dprime
    dW = X.T @ d_prime
    db = d_prime.sum(axis=0)
    dX = d_prime @ params.W.T
    return dW, db, dX


def train_gcn(data: list[tuple[np.ndarray, np.ndarray, int]], config: GcnTrainConfig) -> GcnParams:
    """Fit (or just initialize) the propagation weights.

    ``mode="fixed"`` returns the seeded initialization untouched, a random
    projection extractor. ``mode="trained"`` attaches a temporary linear
    softmax head on the snippet embeddings, minimizes mean cross-entropy plus
    an L2 penalty on W by full-batch gradient descent, then discards the head.
    """
    params, _ = train_gcn_traced(data, config)
    return params


def train_gcn_traced(
    data: list[tuple[np.ndarray, np.ndarray, int]], config: GcnTrainConfig
) -> tuple[GcnParams, GcnTrainTrace]:
    """Like :func:`train_gcn` but also returns the loss curve and head accuracy."""
    if not data:
        raise TrainingError("no training data")
    d_in = np.asarray(data[0][0]).shape[1]
    params = init_params(d_in, config.d_out, config.seed)
    trace = GcnTrainTrace()
    if config.mode == "fixed":
        return params, trace

    for _, _, label in data:
        if not 0 <= label < config.n_classes:
            raise TrainingError(f"label {label} outside 0..{config.n_classes - 1}")

    head_rng = rng(config.seed, 1)
    limit = np.sqrt(6.0 / (config.d_out + config.n_classes))
    U = head_rng.uniform(-limit, limit, size=(config.d_out, config.n_classes))
    c = np.zeros(config.n_classes)
    m = len(data)

    for epoch in range(config.epochs):
        dW = np.zeros_like(params.W)
        db = np.zeros_like(params.b)
        dU = np.zeros_like(U)
        dc = np.zeros_like(c)
        total = 0.0
        for X, A, label in data:
            final, _ = forward(params, X, A)
            probs = _softmax(final.h_final @ U + c)
            total += -np.log(max(probs[label], 1e-300))
            dlogits = probs.copy()
            dlogits[label] -= 1.0
            dU += np.outer(final.h_final, dlogits)
            dc += dlogits
            g_w, g_b, _ = gradient(params, X, A, U @ dlogits)
            dW += g_w
            db += g_b
        loss = total / m + config.l2 * float(np.sum(params.W**2))
        trace.losses.append(loss)
        logger.debug("gcn epoch %d loss %.6f", epoch, loss)
        params.W -= config.learning_rate * (dW / m + 2.0 * config.l2 * params.W)
        params.b -= config.learning_rate * (db / m)
        U -= config.learning_rate * (dU / m)
        c -= config.learning_rate * (dc / m)

    correct = 0
    for X, A, label in data:
        final, _ = forward(params, X, A)
        if int(np.argmax(final.h_final @ U + c)) == label:
            correct += 1
    trace.head_train_accuracy = correct / m
    return params, trace


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _check_shapes(params: GcnParams, X: np.ndarray, A: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != params.d_in:
        raise ShapeError(f"X has shape {X.shape}, expected (n, {params.d_in})")
    n = X.shape[0]
    if A.shape != (n, n):
        raise ShapeError(f"A has shape {A.shape}, expected ({n}, {n})")
