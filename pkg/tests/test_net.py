#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
vcforge - Voice Conversion Toolkit
File: tests/test_net.py
Created: 2026-09-13 14:02:55 UTC

Description:
    Network engine: gradients against finite differences, momentum SGD,
    both pretraining schemes and model files.
'''

import numpy as np
import pytest

from config import TrainConfig
from vcforge.exceptions import FeatureFormatError, InputValidationError, TrainingError
from vcforge.net import (
    FeedForwardNet,
    Layer,
    Normalizer,
    forward,
    init_random,
    load_net,
    loss_and_gradients,
    pretrain_autoencoder,
    pretrain_dlp,
    save_net,
    train,
)

def _with_weight(net: FeedForwardNet, index: int, weights: np.ndarray, bias: np.ndarray) -> FeedForwardNet:
    layers = list(net.layers)
    layers[index] = Layer(weights, bias, layers[index].activation)
    return FeedForwardNet(tuple(layers), net.normalizer)

def numeric_partial(net: FeedForwardNet, x: np.ndarray, t: np.ndarray, l1_lambda: float,
                    index: int, kind: str, pos: tuple, eps: float = 1e-5) -> float:
    """Central difference of the loss in one weight or bias entry."""
    layer = net.layers[index]
    values = []
    for step in (eps, -eps):
        weights, bias = layer.weights.copy(), layer.bias.copy()
        (weights if kind == "w" else bias)[pos] += step
        values.append(loss_and_gradients(_with_weight(net, index, weights, bias), x, t, l1_lambda)[0])
    return (values[0] - values[1]) / (2 * eps)

def numeric_gradients(net: FeedForwardNet, x: np.ndarray, t: np.ndarray, l1_lambda: float, eps: float = 1e-5):
    grads = []
    for index, layer in enumerate(net.layers):
        grad_w = np.zeros_like(layer.weights)
        for pos in np.ndindex(*layer.weights.shape):
            grad_w[pos] = numeric_partial(net, x, t, l1_lambda, index, "w", pos, eps)
        grad_b = np.array([numeric_partial(net, x, t, l1_lambda, index, "b", (pos,), eps)
                           for pos in range(len(layer.bias))])
        grads.append((grad_w, grad_b))
    return grads

class TestConstruction:
    def test_random_init_dims(self):
        net = init_random([5, 7, 3], seed=1)
        assert net.dims == [5, 7, 3]
        assert [layer.activation for layer in net.layers] == ["tanh", "linear"]
        assert net.n_parameters == 5 * 7 + 7 + 7 * 3 + 3
        assert np.all(net.layers[0].bias == 0.0)

    def test_same_seed_same_weights(self):
        a, b = init_random([4, 6, 2], seed=3), init_random([4, 6, 2], seed=3)
        for left, right in zip(a.layers, b.layers):
            np.testing.assert_array_equal(left.weights, right.weights)

    def test_too_few_dims(self):
        with pytest.raises(InputValidationError):
            init_random([3])

    def test_layers_must_chain(self):
        with pytest.raises(InputValidationError, match="chain"):
            FeedForwardNet((Layer(np.zeros((4, 3)), np.zeros(4)), Layer(np.zeros((2, 5)), np.zeros(2), "linear")))

    def test_output_layer_must_be_linear(self):
        with pytest.raises(InputValidationError):
            FeedForwardNet((Layer(np.zeros((2, 3)), np.zeros(2), "tanh"),))

class TestForward:
    def test_single_row_and_batch_agree(self):
        net = init_random([3, 5, 2], seed=0)
        batch = np.random.default_rng(0).standard_normal((4, 3))
        outputs = forward(net, batch)
        assert outputs.shape == (4, 2)
        np.testing.assert_allclose(forward(net, batch[1]), outputs[1])

    def test_matches_hand_computation(self):
        hidden = Layer(np.array([[1.0, -1.0]]), np.array([0.5]), "tanh")
        output = Layer(np.array([[2.0]]), np.array([-1.0]), "linear")
        net = FeedForwardNet((hidden, output))
        assert forward(net, np.array([0.3, 0.1]))[0] == pytest.approx(2.0 * np.tanh(0.7) - 1.0)

    def test_normalizer_wraps_the_layers(self):
        net = FeedForwardNet((Layer(np.eye(2), np.zeros(2), "linear"),),
                             Normalizer(np.array([1.0, 2.0]), np.array([2.0, 2.0]),
                                        np.array([10.0, 0.0]), np.array([1.0, 3.0])))
        np.testing.assert_allclose(forward(net, np.array([3.0, 2.0])), [11.0, 0.0])

    def test_input_dim_mismatch(self):
        with pytest.raises(InputValidationError, match="input dim"):
            forward(init_random([3, 2]), np.zeros(4))

class TestGradients:
    @pytest.mark.parametrize("l1_lambda", [0.0, 0.05])
    def test_match_finite_differences(self, l1_lambda):
        rng = np.random.default_rng(4)
        for seed in range(5):
            n_hidden = int(rng.integers(2, 4))
            dims = [int(rng.integers(2, 6))] + [int(rng.integers(8, 13)) for _ in range(n_hidden)] + [int(rng.integers(1, 5))]
            net = init_random(dims, seed=seed)
            x, t = rng.standard_normal((5, dims[0])), rng.standard_normal((5, dims[-1]))
            _, analytic = loss_and_gradients(net, x, t, l1_lambda)
            entries = [(index, "w", pos) for index, layer in enumerate(net.layers)
                       for pos in np.ndindex(*layer.weights.shape)
                       if not l1_lambda or abs(layer.weights[pos]) > 1e-4]
            entries += [(index, "b", (pos,)) for index, layer in enumerate(net.layers) for pos in range(len(layer.bias))]
            assert len(entries) >= 100
            worst = 0.0
            for choice in rng.choice(len(entries), 100, replace=False):
                index, kind, pos = entries[choice]
                exact = analytic[index][0 if kind == "w" else 1][pos]
                approx = numeric_partial(net, x, t, l1_lambda, index, kind, pos)
                worst = max(worst, abs(exact - approx) / max(abs(exact), abs(approx), 1e-3))
            assert worst < 1e-5, f"dims {dims}: relative error {worst:.2e}"

    def test_with_normalizer(self):
        rng = np.random.default_rng(8)
        x, t = rng.normal(3.0, 2.0, (6, 2)), rng.normal(-1.0, 5.0, (6, 1))
        net = FeedForwardNet(init_random([2, 3, 1], seed=5).layers, Normalizer.fit(x, t))
        _, analytic = loss_and_gradients(net, x, t)
        for (grad_w, _), (num_w, _) in zip(analytic, numeric_gradients(net, x, t, 0.0)):
            np.testing.assert_allclose(grad_w, num_w, rtol=1e-5, atol=1e-7)

    def test_loss_value(self):
        net = FeedForwardNet((Layer(np.zeros((1, 1)), np.array([1.0]), "linear"),))
        loss, _ = loss_and_gradients(net, np.zeros((3, 1)), np.array([[0.0], [1.0], [3.0]]))
        assert loss == pytest.approx(0.5 * (1.0 + 0.0 + 4.0))

    def test_target_shape_mismatch(self):
        with pytest.raises(InputValidationError):
            loss_and_gradients(init_random([2, 3]), np.zeros((4, 2)), np.zeros((4, 2)))

class TestTraining:
    def test_learns_a_linear_map(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((200, 3))
        y = x @ np.array([[1.0, -2.0], [0.5, 0.0], [0.0, 3.0]]) + np.array([4.0, -1.0])
        config = TrainConfig(learning_rate=0.1, momentum=0.5, batch_size=16, max_epochs=100)
        net, history = train(init_random([3, 2], seed=0), x, y, config)
        assert history.epochs == 100
        np.testing.assert_allclose(forward(net, x), y, atol=0.02)

    def test_full_batch_without_momentum_is_one_gradient_step(self):
        rng = np.random.default_rng(12)
        net = init_random([3, 4, 2], seed=12)
        x, y = rng.standard_normal((12, 3)), rng.standard_normal((12, 2))
        config = TrainConfig(learning_rate=0.1, momentum=0.0, batch_size=64, max_epochs=1, normalize=False)
        trained, _ = train(net, x, y, config)
        _, grads = loss_and_gradients(net, x, y)
        for layer, after, (grad_w, grad_b) in zip(net.layers, trained.layers, grads):
            np.testing.assert_allclose(after.weights, layer.weights - 0.1 * grad_w / 12, rtol=1e-10, atol=1e-14)
            np.testing.assert_allclose(after.bias, layer.bias - 0.1 * grad_b / 12, rtol=1e-10, atol=1e-14)

    def test_learns_the_identity(self):
        x = np.random.default_rng(13).uniform(-1.0, 1.0, (50, 1))
        config = TrainConfig(learning_rate=0.5, momentum=0.0, batch_size=50, max_epochs=200, normalize=False)
        net, history = train(init_random([1, 1], seed=13), x, x, config)
        assert history.epochs == 200
        assert float(np.mean((forward(net, x) - x) ** 2)) < 1e-6

    def test_loss_goes_down(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, (300, 2))
        y = np.column_stack([np.sin(2 * x[:, 0]), x[:, 0] * x[:, 1]])
        config = TrainConfig(learning_rate=0.05, momentum=0.5, batch_size=32, max_epochs=60)
        _, history = train(init_random([2, 16, 2], seed=1), x, y, config)
        assert history.mse[-1] < 0.5 * history.mse[0]

    def test_input_net_is_untouched(self):
        rng = np.random.default_rng(2)
        net = init_random([2, 4, 1], seed=2)
        before = [layer.weights.copy() for layer in net.layers]
        train(net, rng.standard_normal((20, 2)), rng.standard_normal((20, 1)), TrainConfig(max_epochs=3))
        for layer, weights in zip(net.layers, before):
            np.testing.assert_array_equal(layer.weights, weights)

    def test_same_seed_same_result(self):
        rng = np.random.default_rng(3)
        x, y = rng.standard_normal((50, 2)), rng.standard_normal((50, 1))
        config = TrainConfig(max_epochs=4, batch_size=8, seed=11)
        a, _ = train(init_random([2, 5, 1], seed=0), x, y, config)
        b, _ = train(init_random([2, 5, 1], seed=0), x, y, config)
        np.testing.assert_array_equal(forward(a, x), forward(b, x))

    def test_validation_split_and_early_stop(self):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal((40, 3)), rng.standard_normal((40, 1))
        config = TrainConfig(learning_rate=0.1, momentum=0.5, batch_size=4, max_epochs=60,
                             validation_fraction=0.25, patience=1)
        _, history = train(init_random([3, 32, 1], seed=4), x, y, config)
        assert history.stopped_early
        assert history.epochs < 60
        assert len(history.validation_mse) == history.epochs

    def test_non_finite_loss(self):
        x = np.array([[1.0], [np.nan]])
        with pytest.raises(TrainingError, match="non-finite"):
            train(init_random([1, 1]), x, np.zeros((2, 1)), TrainConfig(normalize=False, max_epochs=1))

    def test_row_mismatch(self):
        with pytest.raises(InputValidationError):
            train(init_random([1, 1]), np.zeros((3, 1)), np.zeros((2, 1)), TrainConfig())

class TestPretraining:
    def test_autoencoder_reconstructs_static_columns(self):
        rng = np.random.default_rng(5)
        static = rng.standard_normal((120, 2))
        inputs = np.column_stack([static, 0.1 * rng.standard_normal((120, 2))])
        config = TrainConfig(learning_rate=0.05, momentum=0.5, batch_size=16, max_epochs=40, l1_lambda=1e-4)
        net, history = pretrain_autoencoder(init_random([4, 8, 2], seed=5), inputs, config)
        assert history.phase == "pretrain-autoencoder"
        assert net.dims == [4, 8, 2]
        assert history.mse[-1] < history.mse[0]

    def test_autoencoder_without_penalty_warns(self):
        inputs = np.random.default_rng(6).standard_normal((10, 2))
        with pytest.warns(UserWarning, match="l1_lambda"):
            pretrain_autoencoder(init_random([2, 2]), inputs, TrainConfig(max_epochs=1))

    def test_autoencoder_target_must_fit(self):
        with pytest.raises(InputValidationError):
            pretrain_autoencoder(init_random([3, 2]), np.zeros((4, 3)), TrainConfig(l1_lambda=1e-4),
                                 static_columns=[0, 1, 2])

    def test_dlp_grows_one_layer_per_stage(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((80, 3))
        y = np.tanh(x[:, :2]) + 0.5 * x[:, 2:]
        net = init_random([3, 6, 5, 2], seed=7)
        trained, histories = pretrain_dlp(net, x, y, TrainConfig(batch_size=16, max_epochs=50), stage_epochs=3)
        assert [h.phase for h in histories] == ["dlp-stage-1", "dlp-stage-2"]
        assert all(h.epochs == 3 for h in histories)
        assert trained.dims == net.dims

    def test_each_dlp_stage_lowers_its_loss(self):
        rng = np.random.default_rng(14)
        x = rng.uniform(-1.0, 1.0, (200, 3))
        y = np.column_stack([np.sin(2.0 * x[:, 0]), x[:, 1] * x[:, 2]])
        config = TrainConfig(learning_rate=0.05, momentum=0.5, batch_size=8)
        _, histories = pretrain_dlp(init_random([3, 12, 12, 10, 2], seed=14), x, y, config, stage_epochs=10)
        assert len(histories) == 3
        for history in histories:
            assert history.mse[-1] < history.mse[0], history.phase

    def test_dlp_without_hidden_layers(self):
        rng = np.random.default_rng(8)
        trained, histories = pretrain_dlp(init_random([2, 1]), rng.standard_normal((10, 2)),
                                          rng.standard_normal((10, 1)), TrainConfig(), stage_epochs=2)
        assert len(histories) == 1
        assert trained.dims == [2, 1]

class TestNetFiles:
    def _trained(self):
        rng = np.random.default_rng(9)
        x, y = rng.standard_normal((30, 3)), rng.standard_normal((30, 2))
        return train(init_random([3, 4, 2], seed=9), x, y, TrainConfig(max_epochs=2))[0], x

    def test_reads_back_exactly(self, tmp_path):
        net, x = self._trained()
        save_net(net, tmp_path / "n.vcnn")
        loaded = load_net(tmp_path / "n.vcnn")
        assert loaded.dims == net.dims
        np.testing.assert_array_equal(forward(loaded, x), forward(net, x))
        np.testing.assert_array_equal(loaded.normalizer.output_std, net.normalizer.output_std)

    def test_random_nets_read_back_exactly(self, tmp_path):
        rng = np.random.default_rng(10)
        path = tmp_path / "n.vcnn"
        for seed in range(1000):
            dims = [int(d) for d in rng.integers(1, 7, size=int(rng.integers(2, 5)))]
            net = init_random(dims, seed=seed)
            layers = tuple(Layer(rng.standard_normal(layer.weights.shape), rng.standard_normal(layer.bias.shape),
                                 layer.activation) for layer in net.layers)
            normalizer = None
            if rng.random() < 0.5:
                normalizer = Normalizer(rng.standard_normal(dims[0]), rng.uniform(0.1, 5.0, dims[0]),
                                        rng.standard_normal(dims[-1]), rng.uniform(0.1, 5.0, dims[-1]))
            net = FeedForwardNet(layers, normalizer)
            save_net(net, path)
            loaded = load_net(path)
            assert loaded.dims == net.dims
            for left, right in zip(loaded.layers, net.layers):
                assert left.activation == right.activation
                np.testing.assert_array_equal(left.weights, right.weights)
                np.testing.assert_array_equal(left.bias, right.bias)
            if normalizer is None:
                assert loaded.normalizer is None
            else:
                for field in ("input_mean", "input_std", "output_mean", "output_std"):
                    np.testing.assert_array_equal(getattr(loaded.normalizer, field), getattr(normalizer, field))

    def test_without_normalizer(self, tmp_path):
        net = init_random([2, 3, 1], seed=1)
        save_net(net, tmp_path / "n.vcnn")
        assert load_net(tmp_path / "n.vcnn").normalizer is None

    def test_trailing_bytes(self, tmp_path):
        net, _ = self._trained()
        save_net(net, tmp_path / "n.vcnn")
        (tmp_path / "n.vcnn").write_bytes((tmp_path / "n.vcnn").read_bytes() + b"\x00" * 8)
        with pytest.raises(FeatureFormatError, match="trailing"):
            load_net(tmp_path / "n.vcnn")

    def test_truncated(self, tmp_path):
        net, _ = self._trained()
        save_net(net, tmp_path / "n.vcnn")
        (tmp_path / "n.vcnn").write_bytes((tmp_path / "n.vcnn").read_bytes()[:40])
        with pytest.raises(FeatureFormatError, match="truncated"):
            load_net(tmp_path / "n.vcnn")

    def test_bad_magic(self, tmp_path):
        (tmp_path / "n.vcnn").write_bytes(b"XXXX" + b"\x01\x00\x00\x00" * 2)
        with pytest.raises(FeatureFormatError):
            load_net(tmp_path / "n.vcnn")
