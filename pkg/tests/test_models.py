import numpy as np
import pytest

from codegraphnet.errors import DataSizeError, ShapeError
from codegraphnet.models import (
    DeepTreeConfig,
    SgdConfig,
    TreeConfig,
    deeptree_predict,
    deeptree_predict_many,
    fit_deeptree,
    fit_sgd_baseline,
    fit_tree,
    linear_from_dict,
    linear_predict_proba,
    linear_to_dict,
    mlp_from_dict,
    mlp_predict_proba,
    mlp_to_dict,
    split_candidates,
    tree_from_dict,
    tree_predict_proba,
    tree_predict_proba_many,
    tree_to_dict,
)


def enumerate_splits(X, y, min_samples_leaf=1, n_classes=5):
    """Definitional Gini gain of every (feature, midpoint) candidate."""
    m = len(y)

    def gini(labels):
        if len(labels) == 0:
            return 0.0
        impurity = 1.0
        for c in range(n_classes):
            count = int(np.sum(labels == c))
            impurity -= (count / len(labels)) ** 2
        return impurity

    parent = gini(y)
    results = []
    for feature in range(X.shape[1]):
        for threshold in split_candidates(X[:, feature]):
            mask = X[:, feature] <= threshold
            n_left = int(mask.sum())
            n_right = m - n_left
            if n_left < min_samples_leaf or n_right < min_samples_leaf:
                continue
            weighted = (n_left / m) * gini(y[mask]) + (n_right / m) * gini(y[~mask])
            results.append((feature, threshold, parent - weighted))
    return results


def cluster_data(rng, n_per_class=100, d=32, n_classes=5, spread=0.5):
    """One well-separated Gaussian cluster per class."""
    centers = rng.normal(scale=4.0, size=(n_classes, d))
    X = np.vstack([
        centers[c] + rng.normal(scale=spread, size=(n_per_class, d)) for c in range(n_classes)
    ])
    y = np.repeat(np.arange(n_classes), n_per_class)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


class TestFitTree:
    def test_pure_node_is_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        y = np.full(20, 2)
        tree = fit_tree(X, y)
        assert tree.root.is_leaf
        assert tree.root.probs.tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]

    def test_one_dimensional_threshold_split(self):
        X = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        tree = fit_tree(X, y, TreeConfig(min_samples_leaf=1))
        assert tree.depth() == 1
        assert tree.root.threshold == 0.0
        predictions = [int(np.argmax(tree_predict_proba(tree, row))) for row in X]
        assert predictions == y.tolist()

    def test_root_split_beats_every_alternative(self):
        rng = np.random.default_rng(99)
        for trial in range(50):
            X = rng.normal(size=(20, 3))
            y = rng.integers(0, 5, size=20)
            if len(np.unique(y)) == 1:
                continue
            tree = fit_tree(X, y, TreeConfig(min_samples_leaf=1, max_depth=1))
            alternatives = enumerate_splits(X, y, min_samples_leaf=1)
            if tree.root.is_leaf:
                assert all(gain <= 0.0 for _, _, gain in alternatives)
                continue
            chosen = next(
                gain
                for feature, threshold, gain in alternatives
                if feature == tree.root.feature and threshold == tree.root.threshold
            )
            for feature, threshold, gain in alternatives:
                assert chosen >= gain
                if gain == chosen:
                    # Tie rule: lowest feature index, then lowest threshold.
                    assert (tree.root.feature, tree.root.threshold) <= (feature, threshold)

    def test_identical_rows_mixed_labels_single_leaf(self):
        X = np.ones((8, 4))
        y = np.array([0, 1, 0, 1, 2, 2, 0, 1])
        tree = fit_tree(X, y)
        assert tree.root.is_leaf
        assert abs(tree.root.probs.sum() - 1.0) < 1e-9

    def test_row_order_invariance(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 4))
        y = rng.integers(0, 5, size=40)
        tree_a = fit_tree(X, y)
        perm = rng.permutation(40)
        tree_b = fit_tree(X[perm], y[perm])
        assert tree_to_dict(tree_a)["nodes"] == tree_to_dict(tree_b)["nodes"]

    def test_depth_bounded_by_config(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(200, 5))
        y = rng.integers(0, 5, size=200)
        tree = fit_tree(X, y, TreeConfig(max_depth=4, min_samples_leaf=1))
        assert tree.depth() <= 4

    def test_leaf_probabilities_sum_to_one(self):
        rng = np.random.default_rng(29)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 5, size=60)
        tree = fit_tree(X, y)

        def walk(node):
            if node.is_leaf:
                assert abs(node.probs.sum() - 1.0) < 1e-9
                assert (node.probs >= 0.0).all()
            else:
                walk(node.left)
                walk(node.right)

        walk(tree.root)


class TestTreePredict:
    def test_constant_tree(self):
        tree = fit_tree(np.zeros((5, 2)), np.full(5, 3))
        for _ in range(5):
            assert tree_predict_proba(tree, np.random.default_rng(1).normal(size=2)).tolist() == [
                0.0, 0.0, 0.0, 1.0, 0.0,
            ]

    def test_probabilities_sum_to_one_random_inputs(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 5, size=50)
        tree = fit_tree(X, y)
        for _ in range(1000):
            probs = tree_predict_proba(tree, rng.normal(size=4))
            assert abs(probs.sum() - 1.0) < 1e-9

    def test_memorization_with_unit_leaves(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 3))        # distinct rows almost surely
        y = rng.integers(0, 5, size=30)
        tree = fit_tree(X, y, TreeConfig(max_depth=64, min_samples_leaf=1))
        for row, label in zip(X, y):
            probs = tree_predict_proba(tree, row)
            assert probs[label] == 1.0

    def test_dimension_mismatch(self):
        tree = fit_tree(np.zeros((4, 2)), np.array([0, 0, 1, 1]))
        with pytest.raises(ShapeError):
            tree_predict_proba(tree, np.zeros(3))


class TestDeepTree:
    def test_separable_clusters_reach_train_accuracy(self):
        rng = np.random.default_rng(5)
        X, y = cluster_data(rng)
        model, report = fit_deeptree(X, y, DeepTreeConfig(seed=1))
        assert report.final_train_accuracy >= 0.95
        assert len(report.losses) == 100
        assert report.wall_seconds > 0.0

    def test_label_is_argmax_of_probabilities(self):
        rng = np.random.default_rng(6)
        X, y = cluster_data(rng, n_per_class=20, d=8)
        model, _ = fit_deeptree(X, y, DeepTreeConfig(epochs=20, seed=2))
        for row in X[:25]:
            label, probs = deeptree_predict(model, row)
            assert label == int(np.argmax(probs))
            assert abs(probs.sum() - 1.0) < 1e-9

    def test_converged_network_matches_tree_argmax(self):
        # With pure leaves the transformed features are one-hot, so a
        # converged head reproduces the tree's own decision.
        rng = np.random.default_rng(7)
        X, y = cluster_data(rng, n_per_class=30, d=8, spread=0.2)
        config = DeepTreeConfig(tree=TreeConfig(min_samples_leaf=1), epochs=300, seed=3)
        model, _ = fit_deeptree(X, y, config)
        for row in X[:40]:
            tree_label = int(np.argmax(tree_predict_proba(model.tree, row)))
            label, _ = deeptree_predict(model, row)
            assert label == tree_label

    def test_too_few_samples_rejected(self):
        with pytest.raises(DataSizeError):
            fit_deeptree(np.zeros((9, 2)), np.zeros(9, dtype=int))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        X, y = cluster_data(rng, n_per_class=15, d=6)
        _, report_a = fit_deeptree(X, y, DeepTreeConfig(epochs=15, seed=11))
        _, report_b = fit_deeptree(X, y, DeepTreeConfig(epochs=15, seed=11))
        assert report_a.losses == report_b.losses

    def test_losses_finite_across_seed_sweep(self):
        rng = np.random.default_rng(9)
        X, y = cluster_data(rng, n_per_class=12, d=6)
        for seed in range(20):
            _, report = fit_deeptree(X, y, DeepTreeConfig(epochs=10, seed=seed))
            assert np.isfinite(report.losses).all()

    def test_predict_many_matches_single(self):
        rng = np.random.default_rng(10)
        X, y = cluster_data(rng, n_per_class=12, d=6)
        model, _ = fit_deeptree(X, y, DeepTreeConfig(epochs=10, seed=1))
        labels, probs = deeptree_predict_many(model, X[:10])
        for i in range(10):
            single_label, single_probs = deeptree_predict(model, X[i])
            assert labels[i] == single_label
            assert np.allclose(probs[i], single_probs, atol=1e-12)


class TestSgdBaseline:
    def test_separable_two_class_perfect_accuracy(self):
        rng = np.random.default_rng(11)
        X = np.vstack([rng.normal(size=(30, 4)) - 3.0, rng.normal(size=(30, 4)) + 3.0])
        y = np.array([0] * 30 + [1] * 30)
        model = fit_sgd_baseline(X, y, SgdConfig(epochs=200, seed=5))
        predictions = np.argmax(linear_predict_proba(model, X), axis=1)
        assert (predictions == y).all()

    def test_loss_decreases_from_initialization(self):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.normal(size=(20, 3)) - 2.0, rng.normal(size=(20, 3)) + 2.0])
        y = np.array([0] * 20 + [1] * 20)
        model = fit_sgd_baseline(X, y, SgdConfig(epochs=50, seed=1))

        def mean_ce(w, b):
            logits = X @ w + b
            logits -= logits.max(axis=1, keepdims=True)
            probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
            return float(-np.log(probs[np.arange(len(y)), y]).mean())

        initial = mean_ce(np.zeros_like(model.W), np.zeros_like(model.b))
        assert mean_ce(model.W, model.b) < initial

    def test_zero_epochs_is_initialization(self):
        X = np.random.default_rng(13).normal(size=(10, 3))
        y = np.zeros(10, dtype=int)
        model = fit_sgd_baseline(X, y, SgdConfig(epochs=0, seed=9))
        assert not model.W.any() and not model.b.any()


class TestSerialization:
    def test_tree_round_trip_predictions(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 5, size=50)
        tree = fit_tree(X, y)
        restored = tree_from_dict(tree_to_dict(tree))
        for _ in range(100):
            x = rng.normal(size=4)
            assert np.array_equal(tree_predict_proba(tree, x), tree_predict_proba(restored, x))

    def test_mlp_round_trip_predictions(self):
        rng = np.random.default_rng(15)
        X, y = cluster_data(rng, n_per_class=10, d=6)
        model, _ = fit_deeptree(X, y, DeepTreeConfig(epochs=5, seed=0))
        restored = mlp_from_dict(mlp_to_dict(model.mlp))
        Z = rng.dirichlet(np.ones(5), size=100)
        assert np.array_equal(mlp_predict_proba(model.mlp, Z), mlp_predict_proba(restored, Z))

    def test_linear_round_trip_predictions(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(20, 3))
        y = rng.integers(0, 5, size=20)
        model = fit_sgd_baseline(X, y, SgdConfig(epochs=5, seed=1))
        restored = linear_from_dict(linear_to_dict(model))
        Xn = rng.normal(size=(100, 3))
        assert np.array_equal(linear_predict_proba(model, Xn), linear_predict_proba(restored, Xn))
