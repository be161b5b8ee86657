"""Classifiers over snippet embeddings.

Three models: a CART decision tree with Gini impurity, the DeepTree hybrid
(the tree's class probabilities feed a small feed-forward network trained
with adaptive-moment gradient descent and sparse categorical cross-entropy),
and a softmax-regression baseline trained by per-sample SGD.

The tree's split scan is deliberately written with plain scalar arithmetic
over integer class counts, so its candidate gains are reproducible by a
definitional re-computation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DataSizeError, ShapeError, ValidationError
from .util import rng

N_CLASSES = 5

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# ---------------------------------------------------------------------------
# Decision tree (CART, Gini impurity)
# ---------------------------------------------------------------------------

@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    probs: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.probs is not None


@dataclass
class TreeConfig:
    max_depth: int = 12
    min_samples_leaf: int = 2
    seed: int = 0          # kept for interface symmetry; the scan is deterministic
    n_classes: int = N_CLASSES


@dataclass
class TreeModel:
    root: TreeNode
    n_features: int
    n_classes: int
    max_depth: int
    min_samples_leaf: int

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def gini_from_counts(counts, total: int) -> float:
    """Gini impurity from integer class counts, summed in class order."""
    if total == 0:
        return 0.0
    impurity = 1.0
    for c in counts:
        impurity -= (c / total) ** 2
    return impurity


def split_candidates(values: np.ndarray) -> list[float]:
    """Midpoints of consecutive sorted unique values of one feature column."""
    uniq = np.unique(values)
    return [(float(uniq[i]) + float(uniq[i + 1])) / 2.0 for i in range(len(uniq) - 1)]


def fit_tree(X: np.ndarray, y: np.ndarray, config: TreeConfig | None = None) -> TreeModel:
    """Grow a CART classifier by exhaustive scan over features and midpoints.

    The best split maximizes Gini gain; ties go to the lowest feature index,
    then the lowest threshold. Leaves hold raw class frequencies.
    """
    config = config or TreeConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has shape {X.shape} but y has length {y.shape}")
    if X.shape[0] < 2:
        raise DataSizeError(f"need at least 2 samples to fit a tree, got {X.shape[0]}")
    if y.min() < 0 or y.max() >= config.n_classes:
        raise ValidationError(f"labels must lie in 0..{config.n_classes - 1}")

    root = _grow(X, y, depth=0, config=config)
    return TreeModel(
        root=root,
        n_features=X.shape[1],
        n_classes=config.n_classes,
        max_depth=config.max_depth,
        min_samples_leaf=config.min_samples_leaf,
    )


def _leaf(y: np.ndarray, n_classes: int) -> TreeNode:
    counts = np.bincount(y, minlength=n_classes)
    return TreeNode(probs=counts / len(y))


def _grow(X: np.ndarray, y: np.ndarray, depth: int, config: TreeConfig) -> TreeNode:
    m = len(y)
    if depth >= config.max_depth or m < 2 * config.min_samples_leaf or len(np.unique(y)) == 1:
        return _leaf(y, config.n_classes)

    best = find_best_split(X, y, config.min_samples_leaf, config.n_classes)
    if best is None:
        return _leaf(y, config.n_classes)
    feature, threshold, _ = best
    mask = X[:, feature] <= threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        left=_grow(X[mask], y[mask], depth + 1, config),
        right=_grow(X[~mask], y[~mask], depth + 1, config),
    )


def find_best_split(
    X: np.ndarray, y: np.ndarray, min_samples_leaf: int, n_classes: int
) -> tuple[int, float, float] | None:
    """The (feature, threshold, gain) maximizing Gini gain, or None if no
    candidate has positive gain.

    Candidate gains are computed with scalar arithmetic over incrementally
    maintained integer counts; both sides of a valid split must keep at
    least ``min_samples_leaf`` samples.
    """
    m = len(y)
    total_counts = np.bincount(y, minlength=n_classes).tolist()
    parent = gini_from_counts(total_counts, m)
    best: tuple[int, float, float] | None = None
    best_gain = 0.0

    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        labels = y[order]
        left_counts = [0] * n_classes
        for i in range(m - 1):
            left_counts[labels[i]] += 1
            if values[i] == values[i + 1]:
                continue
            n_left = i + 1
            n_right = m - n_left
            if n_left < min_samples_leaf or n_right < min_samples_leaf:
                continue
            right_counts = [t - l for t, l in zip(total_counts, left_counts)]
            weighted = (n_left / m) * gini_from_counts(left_counts, n_left) + (
                n_right / m
            ) * gini_from_counts(right_counts, n_right)
            gain = parent - weighted
            if gain > best_gain:
                threshold = (float(values[i]) + float(values[i + 1])) / 2.0
                best = (feature, threshold, gain)
                best_gain = gain
    return best


def tree_predict_proba(tree: TreeModel, x: np.ndarray) -> np.ndarray:
    """Route one feature vector to a leaf and return its probability vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (tree.n_features,):
        raise ShapeError(f"x has shape {x.shape}, expected ({tree.n_features},)")
    node = tree.root
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.probs.copy()


def tree_predict_proba_many(tree: TreeModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.array([tree_predict_proba(tree, row) for row in X]).reshape(len(X), tree.n_classes)


def tree_to_dict(tree: TreeModel) -> dict:
    nodes: list[dict] = []

    def emit(node: TreeNode) -> int:
        idx = len(nodes)
        if node.is_leaf:
            nodes.append({"probs": node.probs.tolist()})
        else:
            nodes.append({"feature": node.feature, "threshold": node.threshold})
            nodes[idx]["left"] = emit(node.left)
            nodes[idx]["right"] = emit(node.right)
        return idx

    emit(tree.root)
    return {
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "max_depth": tree.max_depth,
        "min_samples_leaf": tree.min_samples_leaf,
        "nodes": nodes,
    }


def tree_from_dict(data: dict) -> TreeModel:
    nodes = data["nodes"]

    def build(idx: int) -> TreeNode:
        raw = nodes[idx]
        if "probs" in raw:
            return TreeNode(probs=np.array(raw["probs"], dtype=float))
        return TreeNode(
            feature=int(raw["feature"]),
            threshold=float(raw["threshold"]),
            left=build(raw["left"]),
            right=build(raw["right"]),
        )

    return TreeModel(
        root=build(0),
        n_features=int(data["n_features"]),
        n_classes=int(data["n_classes"]),
        max_depth=int(data["max_depth"]),
        min_samples_leaf=int(data["min_samples_leaf"]),
    )


# ---------------------------------------------------------------------------
# Feed-forward network (the DeepTree head)
# ---------------------------------------------------------------------------

@dataclass
class MlpModel:
    """ReLU hidden layers, softmax output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


@dataclass
class DeepTreeModel:
    tree: TreeModel
    mlp: MlpModel
    class_count: int = N_CLASSES


@dataclass
class DeepTreeConfig:
    tree: TreeConfig = field(default_factory=TreeConfig)
    hidden_dims: tuple[int, ...] = (64, 32)
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0


@dataclass
class TrainReport:
    losses: list[float]
    final_train_accuracy: float
    wall_seconds: float
    seed: int


def _init_mlp(dims: list[int], generator: np.random.Generator) -> MlpModel:
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(generator.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases)


def mlp_forward(mlp: MlpModel, Z: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batch forward pass; returns softmax probabilities and layer activations."""
    activations = [np.asarray(Z, dtype=float)]
    h = activations[0]
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w + b
        h = _softmax_rows(z) if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return h, activations


def mlp_predict_proba(mlp: MlpModel, Z: np.ndarray) -> np.ndarray:
    probs, _ = mlp_forward(mlp, Z)
    return probs


def fit_deeptree(
    X: np.ndarray, y: np.ndarray, config: DeepTreeConfig | None = None
) -> tuple[DeepTreeModel, TrainReport]:
    """Fit the tree, transform every row to its leaf probabilities, then train
    the network on the transformed data with mini-batch Adam.

    Deterministic for a fixed seed: one generator drives initialization and
    the per-epoch shuffle order.
    """
    config = config or DeepTreeConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    m = len(y)
    if m < 10:
        raise DataSizeError(f"deeptree needs at least 10 samples, got {m}")
    started = time.perf_counter()

    tree = fit_tree(X, y, config.tree)
    transformed = tree_predict_proba_many(tree, X)
    n_classes = config.tree.n_classes

    generator = rng(config.seed)
    mlp = _init_mlp([n_classes, *config.hidden_dims, n_classes], generator)
    adam_m = [np.zeros_like(p) for p in mlp.weights + mlp.biases]
    adam_v = [np.zeros_like(p) for p in mlp.weights + mlp.biases]
    step = 0
    losses: list[float] = []

    for _ in range(config.epochs):
        perm = generator.permutation(m)
        epoch_loss = 0.0
        for start in range(0, m, config.batch_size):
            batch = perm[start : start + config.batch_size]
            probs, activations = mlp_forward(mlp, transformed[batch])
            batch_y = y[batch]
            epoch_loss += float(-np.log(np.maximum(probs[np.arange(len(batch)), batch_y], 1e-300)).sum())
            grads = _mlp_gradients(mlp, activations, probs, batch_y)
            step += 1
            _adam_step(mlp, grads, adam_m, adam_v, step, config.learning_rate)
        losses.append(epoch_loss / m)

    final_probs = mlp_predict_proba(mlp, transformed)
    accuracy = float(np.mean(np.argmax(final_probs, axis=1) == y))
    report = TrainReport(
        losses=losses,
        final_train_accuracy=accuracy,
        wall_seconds=time.perf_counter() - started,
        seed=config.seed,
    )
    return DeepTreeModel(tree=tree, mlp=mlp, class_count=n_classes), report


def deeptree_predict(model: DeepTreeModel, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Predict one sample: tree probabilities through the network; argmax label."""
    leaf_probs = tree_predict_proba(model.tree, x)
    probs = mlp_predict_proba(model.mlp, leaf_probs[None, :])[0]
    return int(np.argmax(probs)), probs


def deeptree_predict_many(model: DeepTreeModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    transformed = tree_predict_proba_many(model.tree, X)
    probs = mlp_predict_proba(model.mlp, transformed)
    return np.argmax(probs, axis=1), probs


def _mlp_gradients(
    mlp: MlpModel, activations: list[np.ndarray], probs: np.ndarray, y: np.ndarray
) -> list[np.ndarray]:
    batch = len(y)
    delta = probs.copy()
    delta[np.arange(batch), y] -= 1.0
    delta /= batch
    weight_grads: list[np.ndarray] = [None] * len(mlp.weights)
    bias_grads: list[np.ndarray] = [None] * len(mlp.biases)
    for layer in range(len(mlp.weights) - 1, -1, -1):
        weight_grads[layer] = activations[layer].T @ delta
        bias_grads[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ mlp.weights[layer].T) * (activations[layer] > 0.0)
    return weight_grads + bias_grads


def _adam_step(
    mlp: MlpModel,
    grads: list[np.ndarray],
    adam_m: list[np.ndarray],
    adam_v: list[np.ndarray],
    step: int,
    learning_rate: float,
) -> None:
    params = mlp.weights + mlp.biases
    for i, (p, g) in enumerate(zip(params, grads)):
        adam_m[i] = ADAM_BETA1 * adam_m[i] + (1 - ADAM_BETA1) * g
        adam_v[i] = ADAM_BETA2 * adam_v[i] + (1 - ADAM_BETA2) * g**2
        m_hat = adam_m[i] / (1 - ADAM_BETA1**step)
        v_hat = adam_v[i] / (1 - ADAM_BETA2**step)
        p -= learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def mlp_to_dict(mlp: MlpModel) -> dict:
    return {
        "layer_dims": mlp.layer_dims,
        "weights": [w.tolist() for w in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
        "hidden_activation": "relu",
        "output_activation": "softmax",
    }


def mlp_from_dict(data: dict) -> MlpModel:
    return MlpModel(
        weights=[np.array(w, dtype=float) for w in data["weights"]],
        biases=[np.array(b, dtype=float) for b in data["biases"]],
    )


# ---------------------------------------------------------------------------
# Softmax-regression baseline (per-sample SGD)
# ---------------------------------------------------------------------------

@dataclass
class LinearModel:
    W: np.ndarray
    b: np.ndarray


@dataclass
class SgdConfig:
    learning_rate: float = 0.01
    epochs: int = 100
    seed: int = 0
    n_classes: int = N_CLASSES


def fit_sgd_baseline(X: np.ndarray, y: np.ndarray, config: SgdConfig | None = None) -> LinearModel:
    """Softmax regression trained by per-sample SGD from a zero initialization.

    The shuffle order per epoch is fixed by the seed; zero epochs returns the
    untouched initialization.
    """
    config = config or SgdConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError(f"X has shape {X.shape} but y has length {len(y)}")
    if len(y) < 2 and config.epochs > 0:
        raise DataSizeError(f"need at least 2 samples, got {len(y)}")
    model = LinearModel(W=np.zeros((X.shape[1], config.n_classes)), b=np.zeros(config.n_classes))
    generator = rng(config.seed)
    for _ in range(config.epochs):
        for i in generator.permutation(len(y)):
            probs = _softmax_rows((X[i] @ model.W + model.b)[None, :])[0]
            delta = probs.copy()
            delta[y[i]] -= 1.0
            model.W -= config.learning_rate * np.outer(X[i], delta)
            model.b -= config.learning_rate * delta
    return model


def linear_predict_proba(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return _softmax_rows(X @ model.W + model.b)


def linear_to_dict(model: LinearModel) -> dict:
    return {"W": model.W.tolist(), "b": model.b.tolist()}


def linear_from_dict(data: dict) -> LinearModel:
    return LinearModel(W=np.array(data["W"], dtype=float), b=np.array(data["b"], dtype=float))


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)
