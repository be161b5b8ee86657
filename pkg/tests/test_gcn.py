import numpy as np
import pytest

from codegraphnet.errors import ShapeError, TrainingError, ValidationError
from codegraphnet.gcn import (
    GcnParams,
    GcnTrainConfig,
    forward,
    gradient,
    init_params,
    train_gcn,
    train_gcn_traced,
)
from codegraphnet.linegraph import adjacency, build_line_graph


def naive_forward(W, b, X, A):
    """Definitional per-node loops over the propagation chain."""
    n, d_in = X.shape
    d_out = W.shape[1]
    x_prime = np.zeros((n, d_out))
    for i in range(n):
        for j in range(d_out):
            acc = b[j]
            for k in range(d_in):
                acc += X[i, k] * W[k, j]
            x_prime[i, j] = acc
    x_dprime = np.zeros((n, d_out))
    for i in range(n):
        for j in range(d_out):
            acc = 0.0
            for k in range(n):
                acc += A[i, k] * x_prime[k, j]
            x_dprime[i, j] = acc
    x_tprime = np.where(x_dprime > 0.0, x_dprime, 0.0)
    h = np.zeros(d_out)
    for j in range(d_out):
        for i in range(n):
            h[j] += x_tprime[i, j]
        h[j] /= n
    return h, x_prime, x_dprime, x_tprime


def random_instance(rng, n_max=16, d_max=32):
    n = int(rng.integers(1, n_max + 1))
    d_in = int(rng.integers(1, d_max + 1))
    d_out = int(rng.integers(1, d_max + 1))
    params = GcnParams(W=rng.normal(size=(d_in, d_out)), b=rng.normal(size=d_out))
    X = rng.normal(size=(n, d_in))
    A = adjacency(build_line_graph(n))
    return params, X, A


class TestInitParams:
    def test_deterministic(self):
        a = init_params(12, 7, seed=99)
        b = init_params(12, 7, seed=99)
        assert np.array_equal(a.W, b.W)

    def test_bias_is_zero(self):
        assert np.array_equal(init_params(5, 3, seed=1).b, np.zeros(3))

    def test_entries_within_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d_in = int(rng.integers(1, 40))
            d_out = int(rng.integers(1, 40))
            params = init_params(d_in, d_out, seed=int(rng.integers(2**62)))
            limit = np.sqrt(6.0 / (d_in + d_out))
            assert np.abs(params.W).max() <= limit

    def test_invalid_dims(self):
        with pytest.raises(ValidationError):
            init_params(0, 4, seed=0)


class TestForward:
    def test_hand_oracle_two_nodes(self):
        params = GcnParams(W=np.eye(2), b=np.zeros(2))
        X = np.eye(2)
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        final, trace = forward(params, X, A)
        assert np.array_equal(trace.x_prime, X)
        assert np.array_equal(trace.x_dprime, np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.array_equal(trace.x_tprime, trace.x_dprime)
        assert np.array_equal(final.h_final, np.array([0.0, 0.5]))
        assert final.n_nodes == 2

    def test_single_node_zero_adjacency_annihilates(self):
        params = init_params(4, 3, seed=2)
        final, trace = forward(params, np.ones((1, 4)), np.zeros((1, 1)))
        assert np.array_equal(trace.x_dprime, np.zeros((1, 3)))
        assert np.array_equal(final.h_final, np.zeros(3))

    def test_relu_clamps_all_negative(self):
        params = GcnParams(W=np.eye(2), b=np.zeros(2))
        X = -np.ones((3, 2))
        A = adjacency(build_line_graph(3))
        final, trace = forward(params, X, A)
        assert (trace.x_tprime == 0.0).all()
        assert np.array_equal(final.h_final, np.zeros(2))

    def test_matches_naive_loops_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            params, X, A = random_instance(rng)
            final, trace = forward(params, X, A)
            h, x_p, x_dp, x_tp = naive_forward(params.W, params.b, X, A)
            scale = max(1.0, np.abs(h).max())
            assert np.abs(final.h_final - h).max() / scale < 1e-9
            assert np.allclose(trace.x_prime, x_p, rtol=1e-9, atol=1e-12)
            assert np.allclose(trace.x_tprime, x_tp, rtol=1e-9, atol=1e-12)

    def test_trace_nonnegative_after_activation(self):
        rng = np.random.default_rng(8)
        params, X, A = random_instance(rng)
        _, trace = forward(params, X, A)
        assert (trace.x_tprime >= 0.0).all()

    def test_shape_mismatch_names_dimensions(self):
        params = init_params(4, 3, seed=0)
        with pytest.raises(ShapeError, match="4"):
            forward(params, np.ones((2, 5)), np.zeros((2, 2)))
        with pytest.raises(ShapeError):
            forward(params, np.ones((2, 4)), np.zeros((3, 3)))

    def test_line_zero_features_never_reach_output(self):
        # Column 0 of the chain adjacency is zero, so node 0's own features
        # vanish from the aggregation.
        rng = np.random.default_rng(5)
        params = init_params(6, 4, seed=1)
        X = rng.normal(size=(5, 6))
        A = adjacency(build_line_graph(5))
        base, _ = forward(params, X, A)
        X2 = X.copy()
        X2[0] = rng.normal(size=6) * 10
        bumped, _ = forward(params, X2, A)
        assert np.array_equal(base.h_final, bumped.h_final)

    def test_pre_activation_linearity(self):
        rng = np.random.default_rng(6)
        params, X, A = random_instance(rng)
        _, trace1 = forward(params, X, A)
        params_nobias = GcnParams(W=params.W, b=np.zeros_like(params.b))
        _, t1 = forward(params_nobias, X, A)
        _, t2 = forward(params_nobias, 2.0 * X, A)
        assert np.allclose(t2.x_dprime, 2.0 * t1.x_dprime, atol=1e-12)


class TestGradient:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(1)
        params, X, A = random_instance(rng, n_max=4, d_max=4)
        dW, db, dX = gradient(params, X, A, np.zeros(params.d_out))
        assert not dW.any() and not db.any() and not dX.any()

    def test_dead_relu_gives_zero_weight_gradient(self):
        params = GcnParams(W=np.eye(2), b=np.zeros(2))
        X = -np.ones((3, 2))
        A = adjacency(build_line_graph(3))
        dW, db, dX = gradient(params, X, A, np.ones(2))
        assert not dW.any() and not db.any() and not dX.any()

    def test_finite_difference_agreement(self):
        rng = np.random.default_rng(77)
        h = 1e-5
        checked = 0
        seed_stream = iter(range(10_000))
        while checked < 50:
            trial_rng = np.random.default_rng(next(seed_stream) + 1000)
            n = int(trial_rng.integers(1, 5))
            d_in = int(trial_rng.integers(1, 4))
            d_out = int(trial_rng.integers(1, 4))
            params = GcnParams(W=trial_rng.normal(size=(d_in, d_out)), b=trial_rng.normal(size=d_out))
            X = trial_rng.normal(size=(n, d_in))
            A = adjacency(build_line_graph(n))
            upstream = trial_rng.normal(size=d_out)
            _, trace = forward(params, X, A)
            magnitude = np.abs(trace.x_dprime)
            # Exact zeros (the chain's sink rows) are fine; entries merely
            # near zero would let finite differences cross the ReLU kink.
            if np.any((magnitude > 0.0) & (magnitude < 1e-3)):
                continue
            dW, db, dX = gradient(params, X, A, upstream)

            def objective(w, b, x):
                final, _ = forward(GcnParams(W=w, b=b), x, A)
                return float(final.h_final @ upstream)

            for analytic, array, which in ((dW, params.W, "W"), (db, params.b, "b"), (dX, X, "X")):
                it = np.nditer(array, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = array[idx]
                    array[idx] = orig + h
                    plus = objective(params.W, params.b, X)
                    array[idx] = orig - h
                    minus = objective(params.W, params.b, X)
                    array[idx] = orig
                    numeric = (plus - minus) / (2 * h)
                    denom = max(abs(numeric) + abs(float(analytic[idx])), 1e-8)
                    assert abs(numeric - float(analytic[idx])) / denom < 1e-4, (which, idx)
            checked += 1


def offset_toy_data(n_per_class=10, n_lines=3, d=6, offset=2.5, seed=0):
    """Two classes of snippets whose line features differ by a constant shift."""
    rng = np.random.default_rng(seed)
    data = []
    A = adjacency(build_line_graph(n_lines))
    for label in (0, 1):
        for _ in range(n_per_class):
            X = rng.normal(size=(n_lines, d)) + label * offset
            data.append((X, A, label))
    return data


class TestTrainGcn:
    def test_fixed_mode_is_passthrough(self):
        data = offset_toy_data()
        config = GcnTrainConfig(mode="fixed", seed=31, d_out=8)
        params = train_gcn(data, config)
        reference = init_params(6, 8, seed=31)
        assert np.array_equal(params.W, reference.W)
        assert np.array_equal(params.b, reference.b)

    def test_separable_toy_reaches_perfect_head_accuracy(self):
        data = offset_toy_data()
        config = GcnTrainConfig(
            mode="trained", learning_rate=0.1, epochs=200, l2=0.0, seed=3, n_classes=2, d_out=8
        )
        _, trace = train_gcn_traced(data, config)
        assert trace.head_train_accuracy == 1.0

    def test_loss_decreases(self):
        data = offset_toy_data(seed=9)
        config = GcnTrainConfig(mode="trained", learning_rate=0.05, epochs=50, seed=1,
                                n_classes=2, d_out=8)
        _, trace = train_gcn_traced(data, config)
        assert len(trace.losses) == 50
        assert trace.losses[-1] < trace.losses[0]
        assert all(np.isfinite(trace.losses))

    def test_empty_data_raises(self):
        with pytest.raises(TrainingError):
            train_gcn([], GcnTrainConfig())

    def test_bad_label_raises(self):
        data = offset_toy_data()
        data[0] = (data[0][0], data[0][1], 7)
        with pytest.raises(TrainingError):
            train_gcn(data, GcnTrainConfig(n_classes=2, d_out=8))

    def test_learning_rate_validation(self):
        with pytest.raises(ValidationError):
            GcnTrainConfig(learning_rate=1.5)
