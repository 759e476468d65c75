"""Adam optimizer against an inline scalar reference implementation."""
import numpy as np
import pytest

from wattsplit.autodiff import Tensor
from wattsplit.optim import Adam, Parameter


def reference_adam(theta0, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar-loop Adam oracle; returns the trajectory of theta."""
    theta = float(theta0)
    m = v = 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        theta -= lr * mhat / (np.sqrt(vhat) + eps)
        out.append(theta)
    return out


def make_param(values, name="p"):
    return Parameter(name, Tensor(np.asarray(values, dtype=np.float64)))


class TestAdam:
    def test_first_step_magnitude_equals_lr(self):
        p = make_param([1.0])
        p.tensor.grad = np.array([0.5])
        Adam(learning_rate=1e-3).step([p])
        # bias-corrected first step is lr * g / (|g| + eps) = ~lr
        assert abs(p.tensor.values[0] - (1.0 - 1e-3)) < 1e-9

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(0)
        grads = rng.normal(size=50)
        p = make_param([0.3])
        opt = Adam(learning_rate=0.01)
        mine = []
        for g in grads:
            p.tensor.grad = np.array([g])
            opt.step([p])
            mine.append(float(p.tensor.values[0]))
        ref = reference_adam(0.3, grads, lr=0.01)
        np.testing.assert_allclose(mine, ref, rtol=1e-12, atol=1e-12)

    def test_quadratic_descent(self):
        # minimize theta^2 from theta0=1 with lr=0.1: 100 steps reach |theta| < 0.1
        p = make_param([1.0])
        opt = Adam(learning_rate=0.1)
        for _ in range(100):
            p.tensor.grad = 2.0 * p.tensor.values
            opt.step([p])
        assert abs(p.tensor.values[0]) < 0.1

    def test_zero_gradient_leaves_values(self):
        p = make_param([1.0, -2.0])
        p.tensor.grad = np.zeros(2)
        opt = Adam()
        opt.step([p])
        np.testing.assert_array_equal(p.tensor.values, [1.0, -2.0])
        assert opt.step_count == 1

    def test_missing_gradient_rejected_with_name(self):
        p = make_param([1.0], name="power/fc/weights")
        with pytest.raises(ValueError, match="power/fc/weights"):
            Adam().step([p])

    def test_non_trainable_untouched(self):
        frozen = Parameter("frozen", Tensor([5.0]), trainable=False)
        live = make_param([1.0], name="live")
        live.tensor.grad = np.array([1.0])
        Adam().step([frozen, live])
        assert frozen.tensor.values[0] == 5.0
        assert live.tensor.values[0] != 1.0

    def test_gradients_cleared_after_step(self):
        p = make_param([1.0])
        p.tensor.grad = np.array([1.0])
        Adam().step([p])
        assert p.tensor.grad is None

    def test_duplicate_names_rejected(self):
        a, b = make_param([1.0], "x"), make_param([2.0], "x")
        a.tensor.grad = np.array([0.0])
        b.tensor.grad = np.array([0.0])
        with pytest.raises(ValueError, match="duplicate"):
            Adam().step([a, b])

    def test_accumulator_shape_mismatch_rejected(self):
        p = make_param([1.0, 2.0])
        p.tensor.grad = np.zeros(2)
        opt = Adam()
        opt.step([p])
        p.tensor.values = np.zeros(3)
        p.tensor.grad = np.zeros(3)
        with pytest.raises(ValueError, match="accumulator"):
            opt.step([p])

    def test_bitwise_deterministic(self):
        def run():
            rng = np.random.default_rng(42)
            p = Parameter("w", Tensor(rng.normal(size=(4, 3))))
            opt = Adam(learning_rate=0.05)
            for _ in range(20):
                p.tensor.grad = rng.normal(size=(4, 3))
                opt.step([p])
            return p.tensor.values.tobytes()

        assert run() == run()

    def test_step_counter_monotone(self):
        p = make_param([1.0])
        opt = Adam()
        for expected in range(1, 6):
            p.tensor.grad = np.array([0.1])
            opt.step([p])
            assert opt.step_count == expected

    def test_hyperparameter_validation(self):
        with pytest.raises(ValueError):
            Adam(learning_rate=0.0)
        with pytest.raises(ValueError):
            Adam(beta1=1.0)
        with pytest.raises(ValueError):
            Adam(epsilon=0.0)
