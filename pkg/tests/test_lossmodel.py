import numpy as np
import pytest

from stfl.datagen import DataPoint, default_population_spec, empirical_jacobian, generate_dataset
from stfl.lossmodel import (
    LossModel,
    QuadraticLoss,
    averaged_gradient,
    quadratic_gradient,
    quadratic_loss,
)

TARGET = np.array([1.0, -1.0]) / np.sqrt(2.0)


def small_dataset(device_id=0, seed=0, n=None):
    spec = default_population_spec()
    if n is not None:
        spec.dataset_size = n
    return generate_dataset(spec, device_id, seed)


class TestQuadraticLoss:
    def test_exact_fit(self):
        assert quadratic_loss(DataPoint(np.array([1.0, 0.0]), 1.0), [1.0, 0.0]) == 0.0

    def test_unit_residual(self):
        assert quadratic_loss(DataPoint(np.array([1.0, 0.0]), 1.0), [0.0, 0.0]) == 0.5

    def test_target_orthogonal_input(self):
        # the target has zero response along [1, 1]
        assert quadratic_loss(DataPoint(np.array([1.0, 1.0]), 0.0), TARGET) < 1e-30

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            quadratic_loss(DataPoint(np.array([1.0, 0.0]), 1.0), [1.0, 0.0, 0.0])


class TestQuadraticGradient:
    def test_hand_value(self):
        grad = quadratic_gradient(DataPoint(np.array([1.0, 0.0]), 1.0), [0.0, 0.0])
        np.testing.assert_array_equal(grad, [-1.0, 0.0])

    def test_zero_at_target_on_noiseless_point(self):
        x = np.array([0.3, 1.7])
        point = DataPoint(x, float(TARGET @ x))
        np.testing.assert_allclose(
            quadratic_gradient(point, TARGET), np.zeros(2), atol=1e-16
        )

    def test_matches_central_finite_differences(self):
        # independent oracle: central differences of the loss itself
        rng = np.random.default_rng(42)
        loss = QuadraticLoss()
        for _ in range(100):
            x = rng.normal(size=2)
            y = rng.normal()
            model = rng.normal(size=2)
            point = DataPoint(x, y)
            grad = loss.gradient_at_point(point, model)
            for k in range(2):
                h = 1e-6 * (1.0 + abs(model[k]))
                up = model.copy()
                down = model.copy()
                up[k] += h
                down[k] -= h
                fd = (loss.loss(point, up) - loss.loss(point, down)) / (2 * h)
                assert abs(grad[k] - fd) <= 1e-6 * max(1.0, abs(fd))


class TestAveragedGradient:
    def test_singleton_equals_point_gradient(self):
        ds = small_dataset(n=1)
        point = ds.points[0]
        model = np.array([0.4, -0.2])
        np.testing.assert_allclose(
            averaged_gradient(ds, model, QuadraticLoss()),
            quadratic_gradient(point, model),
            rtol=1e-12,
            atol=1e-15,
        )

    def test_zero_at_target_on_noiseless_dataset(self):
        ds = small_dataset()
        grad = averaged_gradient(ds, TARGET, QuadraticLoss())
        np.testing.assert_allclose(grad, np.zeros(2), atol=1e-16)

    def test_two_point_hand_mean(self):
        ds = small_dataset()
        ds.xs = np.array([[1.0, 0.0], [0.0, 1.0]])
        ds.ys = np.zeros(2)
        grad = averaged_gradient(ds, np.array([1.0, 1.0]), QuadraticLoss())
        np.testing.assert_allclose(grad, [0.5, 0.5], rtol=1e-15)

    def test_empty_dataset_rejected(self):
        ds = small_dataset()
        ds.xs = np.zeros((0, 2))
        ds.ys = np.zeros(0)
        with pytest.raises(ValueError, match="empty"):
            averaged_gradient(ds, TARGET, QuadraticLoss())

    def test_generic_fallback_matches_vectorized(self):
        class PlainQuadratic(LossModel):
            def loss(self, point, model):
                return quadratic_loss(point, model)

            def gradient_at_point(self, point, model):
                return quadratic_gradient(point, model)

            def jacobian(self, dataset, model):
                return empirical_jacobian(dataset)

        ds = small_dataset(device_id=5, seed=3)
        model = np.array([0.1, 0.9])
        slow = averaged_gradient(ds, model, PlainQuadratic())
        fast = averaged_gradient(ds, model, QuadraticLoss())
        np.testing.assert_allclose(slow, fast, rtol=1e-12, atol=1e-14)


class TestJacobian:
    def test_equals_second_moment_and_model_independent(self):
        ds = small_dataset(device_id=2, seed=8)
        loss = QuadraticLoss()
        rng = np.random.default_rng(0)
        j1 = loss.jacobian(ds, rng.normal(size=2))
        j2 = loss.jacobian(ds, rng.normal(size=2))
        np.testing.assert_array_equal(j1, j2)
        np.testing.assert_array_equal(j1, empirical_jacobian(ds))

    def test_gradient_linearity_in_model(self):
        # the averaged gradient is exactly linear around the target
        ds = small_dataset(device_id=9, seed=4)
        loss = QuadraticLoss()
        jac = loss.jacobian(ds, TARGET)
        rng = np.random.default_rng(5)
        for _ in range(10):
            model = rng.normal(size=2)
            lhs = averaged_gradient(ds, model, loss) - averaged_gradient(ds, TARGET, loss)
            rhs = jac @ (model - TARGET)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)
