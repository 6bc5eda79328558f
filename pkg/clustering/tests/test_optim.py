import numpy as np
from django.test import SimpleTestCase

from clustering.autodiff import parameter
from clustering.optim import SGD, Adam, OptimizerKind, build_optimizer
from waveforms.exceptions import InvalidInputError


def with_grad(value, grad, dtype=np.float64):
    param = parameter([value], dtype)
    param.grad = np.array([grad], dtype=dtype)
    return param


class SgdTests(SimpleTestCase):

    def test_plain_step(self):
        param = with_grad(1.0, 2.0)
        SGD([param], lr=0.1).step()
        np.testing.assert_allclose(param.data, [0.8])

    def test_momentum_accumulates(self):
        param = with_grad(1.0, 1.0)
        optimizer = SGD([param], lr=0.1, momentum=0.9)
        optimizer.step()
        optimizer.step()
        np.testing.assert_allclose(param.data, [1.0 - 0.1 - 0.19])
        self.assertEqual(optimizer.steps, 2)

    def test_parameters_without_gradient_are_skipped(self):
        param = parameter([3.0], np.float64)
        SGD([param], lr=1.0).step()
        np.testing.assert_array_equal(param.data, [3.0])


class AdamTests(SimpleTestCase):

    def test_two_steps_by_hand(self):
        param = with_grad(1.0, 0.5)
        optimizer = Adam([param], lr=0.1)
        optimizer.step()
        param.grad = np.array([-1.0])
        optimizer.step()

        expected, m, v = 1.0, 0.0, 0.0
        for step, grad in enumerate((0.5, -1.0), start=1):
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad ** 2
            expected -= 0.1 * (m / (1 - 0.9 ** step)) / (np.sqrt(v / (1 - 0.999 ** step)) + 1e-8)
        np.testing.assert_allclose(param.data, [expected], rtol=1e-12)

    def test_first_step_moves_by_lr(self):
        param = with_grad(0.0, 3.0)
        Adam([param], lr=0.01).step()
        np.testing.assert_allclose(param.data, [-0.01], rtol=1e-6)

    def test_dtype_is_kept(self):
        param = with_grad(1.0, 1.0, dtype=np.float32)
        Adam([param], lr=0.1).step()
        self.assertEqual(param.dtype, np.float32)


class OptimizerContractTests(SimpleTestCase):

    def test_zero_learning_rate_is_a_no_op(self):
        for kind in OptimizerKind.values:
            param = with_grad(1.5, 4.0)
            build_optimizer(kind, [param], lr=0.0).step()
            np.testing.assert_array_equal(param.data, [1.5])

    def test_negative_learning_rate(self):
        with self.assertRaises(InvalidInputError):
            SGD([], lr=-1.0)

    def test_build_optimizer(self):
        self.assertIsInstance(build_optimizer(OptimizerKind.SGD, [], lr=0.1), SGD)
        self.assertIsInstance(build_optimizer("adam", [], lr=0.1), Adam)
        with self.assertRaises(InvalidInputError):
            build_optimizer("rmsprop", [], lr=0.1)

    def test_zero_grad(self):
        param = with_grad(1.0, 1.0)
        optimizer = SGD([param], lr=0.1)
        optimizer.zero_grad()
        self.assertIsNone(param.grad)
