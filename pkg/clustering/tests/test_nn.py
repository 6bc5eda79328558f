import numpy as np
from django.test import SimpleTestCase

from clustering.autodiff import Tensor, parameter
from clustering.exceptions import CheckpointError, ShapeError
from clustering.nn import (
    BatchNorm1d,
    Linear,
    MultiHeadAttention,
    TransformerEncoderLayer,
    avgpool1d,
    batchnorm1d,
    conv1d,
    layer_norm,
    maxpool1d,
    positional_encoding,
)
from clustering.tests.test_autodiff import F64, GradientCheckMixin, randn

RANDOM_SHAPE_TRIALS = 20


class ConvolutionTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(10)

    def test_identity_kernel_with_same_padding(self):
        x = self.rng.standard_normal((2, 3, 11))
        weight = np.zeros((3, 3, 5))
        for c in range(3):
            weight[c, c] = [0.0, 0.0, 1.0, 0.0, 0.0]
        np.testing.assert_allclose(conv1d(Tensor(x), Tensor(weight), padding=2).data, x, rtol=1e-12)

    def test_stride_two_halves_the_length(self):
        for length in (8, 16, 1024):
            x = Tensor(self.rng.standard_normal((1, 2, length)))
            weight = Tensor(self.rng.standard_normal((4, 2, 3)))
            self.assertEqual(conv1d(x, weight, stride=2, padding=1).shape, (1, 4, length // 2))

    def test_matches_direct_correlation(self):
        x = self.rng.standard_normal((1, 2, 6))
        w = self.rng.standard_normal((1, 2, 3))
        out = conv1d(Tensor(x), Tensor(w)).data
        expected = [sum(np.sum(x[0, :, t + k] * w[0, :, k]) for k in range(3)) for t in range(4)]
        np.testing.assert_allclose(out[0, 0], expected, rtol=1e-12)

    def test_kernel_longer_than_padded_input(self):
        with self.assertRaises(ShapeError):
            conv1d(Tensor(np.ones((1, 1, 3))), Tensor(np.ones((1, 1, 6))), padding=1)


class PoolingTests(GradientCheckMixin, SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_max_gradient_goes_to_the_argmax_only(self):
        values = self.rng.permutation(12).astype(float).reshape(1, 2, 6)
        x = parameter(values, F64)
        maxpool1d(x, 3).sum().backward()
        blocks = values.reshape(1, 2, 2, 3)
        expected = (blocks == blocks.max(axis=-1, keepdims=True)).astype(float).reshape(1, 2, 6)
        np.testing.assert_array_equal(x.grad, expected)

    def test_window_equal_to_length_is_global_pooling(self):
        values = self.rng.standard_normal((3, 4, 9))
        self.assertEqual(maxpool1d(Tensor(values), 9).shape, (3, 4, 1))
        np.testing.assert_array_equal(maxpool1d(Tensor(values), 9).data[..., 0], values.max(axis=-1))
        np.testing.assert_allclose(avgpool1d(Tensor(values), 9).data[..., 0], values.mean(axis=-1), rtol=1e-12)

    def test_pooling_truncates_tail(self):
        x = randn(self.rng, 2, 3, 7)
        self.assertEqual(maxpool1d(x, 2).shape, (2, 3, 3))
        weights = self.rng.standard_normal((2, 3, 3))
        self.assertGradients(lambda: (maxpool1d(x, 2) * weights).sum(), [x])
        self.assertGradients(lambda: (avgpool1d(x, 2) * weights).sum(), [x])
        self.assertTrue(np.all(x.grad[:, :, 6] == 0))

    def test_pool_window_longer_than_input(self):
        with self.assertRaises(ShapeError):
            maxpool1d(Tensor(np.ones((1, 1, 3))), 4)


class RandomShapeGradientTests(GradientCheckMixin, SimpleTestCase):
    """Gradients analytiques contre différences finies sur des formes tirées au hasard."""

    def setUp(self):
        self.rng = np.random.default_rng(12)

    def draw(self, low, high):
        return int(self.rng.integers(low, high + 1))

    def test_conv1d(self):
        for _ in range(RANDOM_SHAPE_TRIALS):
            batch, channels, out_channels = self.draw(1, 3), self.draw(1, 3), self.draw(1, 3)
            kernel, stride, padding = self.draw(1, 4), self.draw(1, 3), self.draw(0, 2)
            length = self.draw(max(1, kernel - 2 * padding), 10)
            x = randn(self.rng, batch, channels, length)
            w = randn(self.rng, out_channels, channels, kernel)
            b = randn(self.rng, out_channels)
            out_shape = conv1d(x, w, b, stride=stride, padding=padding).shape
            self.assertEqual(out_shape, (batch, out_channels, (length + 2 * padding - kernel) // stride + 1))
            weights = self.rng.standard_normal(out_shape)
            self.assertGradients(
                lambda: (conv1d(x, w, b, stride=stride, padding=padding) * weights).sum(), [x, w, b]
            )

    def test_pooling(self):
        for _ in range(RANDOM_SHAPE_TRIALS):
            window = self.draw(1, 4)
            x = randn(self.rng, self.draw(1, 3), self.draw(1, 3), self.draw(window, 12))
            weights = self.rng.standard_normal(maxpool1d(x, window).shape)
            self.assertGradients(lambda: (maxpool1d(x, window) * weights).sum(), [x])
            self.assertGradients(lambda: (avgpool1d(x, window) * weights).sum(), [x])

    def test_normalizations(self):
        for _ in range(RANDOM_SHAPE_TRIALS):
            batch, channels, length = self.draw(2, 4), self.draw(1, 3), self.draw(3, 6)
            x, gamma, beta = randn(self.rng, batch, channels, length), randn(self.rng, channels), randn(self.rng, channels)
            weights = self.rng.standard_normal((batch, channels, length))
            mean, var = np.zeros(channels), np.ones(channels)
            self.assertGradients(
                lambda: (batchnorm1d(x, gamma, beta, mean, var) * weights).sum(), [x, gamma, beta], atol=1e-7
            )
            g, h = randn(self.rng, length), randn(self.rng, length)
            self.assertGradients(lambda: (layer_norm(x, g, h) * weights).sum(), [x, g, h], atol=1e-7)


class KernelGradientTests(GradientCheckMixin, SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(2)

    def test_conv1d_with_stride_and_padding(self):
        x, w, b = randn(self.rng, 2, 3, 9), randn(self.rng, 4, 3, 3), randn(self.rng, 4)
        out_shape = conv1d(x, w, b, stride=2, padding=1).shape
        self.assertEqual(out_shape, (2, 4, 5))
        weights = self.rng.standard_normal(out_shape)
        self.assertGradients(lambda: (conv1d(x, w, b, stride=2, padding=1) * weights).sum(), [x, w, b])

    def test_batchnorm_training(self):
        x, gamma, beta = randn(self.rng, 4, 3, 5), randn(self.rng, 3), randn(self.rng, 3)
        mean, var = np.zeros(3), np.ones(3)
        weights = self.rng.standard_normal((4, 3, 5))
        self.assertGradients(lambda: (batchnorm1d(x, gamma, beta, mean, var) * weights).sum(), [x, gamma, beta])

    def test_layer_norm(self):
        x, gamma, beta = randn(self.rng, 2, 3, 4), randn(self.rng, 4), randn(self.rng, 4)
        weights = self.rng.standard_normal((2, 3, 4))
        self.assertGradients(lambda: (layer_norm(x, gamma, beta) * weights).sum(), [x, gamma, beta])

    def test_transformer_layer(self):
        layer = TransformerEncoderLayer(4, 2, 6, np.random.default_rng(3), dtype=F64)
        x = randn(self.rng, 2, 3, 4)
        weights = self.rng.standard_normal((2, 3, 4))
        params = [x, layer.attention.query.weight, layer.attention.value.bias, layer.feedforward.inner.weight]
        self.assertGradients(lambda: (layer(x) * weights).sum(), params, rtol=1e-4, atol=1e-7)


class AttentionTests(SimpleTestCase):

    def setUp(self):
        self.attention = MultiHeadAttention(4, 2, np.random.default_rng(13), dtype=F64)
        self.rng = np.random.default_rng(14)

    def test_single_position_returns_projected_values(self):
        x = Tensor(self.rng.standard_normal((3, 1, 4)))
        expected = self.attention.output(self.attention.value(x)).data
        np.testing.assert_allclose(self.attention(x).data, expected, rtol=1e-12, atol=1e-14)

    def test_equivariant_to_position_permutation(self):
        x = self.rng.standard_normal((2, 5, 4))
        order = np.array([2, 4, 0, 3, 1])
        permuted = self.attention(Tensor(x[:, order])).data
        np.testing.assert_allclose(permuted, self.attention(Tensor(x)).data[:, order], rtol=1e-10, atol=1e-12)

    def test_heads_must_divide_dimension(self):
        with self.assertRaises(ShapeError):
            MultiHeadAttention(6, 4, np.random.default_rng(0))


class ModuleTests(SimpleTestCase):

    def test_batchnorm_running_statistics(self):
        norm = BatchNorm1d(2, dtype=F64)
        x = np.array([[[1.0, 3.0], [0.0, 0.0]], [[5.0, 7.0], [2.0, 2.0]]])
        norm(Tensor(x))
        running_mean = norm._buffers["running_mean"]
        running_var = norm._buffers["running_var"]
        np.testing.assert_allclose(running_mean, [0.1 * 4.0, 0.1 * 1.0])
        # Variance non biaisée : 4 valeurs par canal
        np.testing.assert_allclose(running_var, [0.9 + 0.1 * 20.0 / 3.0, 0.9 + 0.1 * 4.0 / 3.0])

        norm.eval()
        out = norm(Tensor(x)).data
        expected = (x - running_mean[None, :, None]) / np.sqrt(running_var[None, :, None] + 1e-5)
        np.testing.assert_allclose(out, expected, rtol=1e-10)

    def test_state_dict_round_trip(self):
        source = BatchNorm1d(3, dtype=F64)
        source(Tensor(np.random.default_rng(0).standard_normal((4, 3, 2))))
        target = BatchNorm1d(3, dtype=F64)
        target.load_state_dict(source.state_dict())
        for key, value in source.state_dict().items():
            np.testing.assert_array_equal(target.state_dict()[key], value)
        self.assertIn("running_var", source.state_dict())

    def test_load_state_dict_errors(self):
        layer = Linear(3, 2, np.random.default_rng(0))
        state = layer.state_dict()
        del state["bias"]
        with self.assertRaises(CheckpointError):
            layer.load_state_dict(state)
        with self.assertRaises(ShapeError):
            layer.load_state_dict({"weight": np.zeros((2, 3)), "bias": np.zeros(2)})

    def test_parameter_names_and_count(self):
        layer = TransformerEncoderLayer(4, 2, 6, np.random.default_rng(0))
        names = [name for name, _ in layer.named_parameters()]
        self.assertIn("attention.query.weight", names)
        self.assertIn("norm2.beta", names)
        self.assertEqual(layer.num_parameters(), 4 * (16 + 4) + (4 * 6 + 6) + (6 * 4 + 4) + 4 * 4)

    def test_positional_encoding(self):
        table = positional_encoding(8, 6)
        self.assertEqual(table.shape, (8, 6))
        np.testing.assert_allclose(table[0, 0::2], 0.0)
        np.testing.assert_allclose(table[0, 1::2], 1.0)
