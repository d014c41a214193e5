"""Pluggable per-point loss with the quadratic (linear regression) instance.

The device and server updates only ever see the LossModel interface, so
swapping in another differentiable loss does not touch the update rules.
Only the quadratic instance ships; it is what the convergence analytics
assume.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .datagen import DataPoint, Dataset, empirical_jacobian


def _check_dims(x: np.ndarray, model: np.ndarray) -> None:
    if np.shape(x) != np.shape(model):
        raise ValueError(
            f"dimension mismatch: point has {np.shape(x)}, model has {np.shape(model)}"
        )


def quadratic_loss(point: DataPoint, model) -> float:
    """Squared residual loss 0.5 * (y - model . x)^2."""
    model = np.asarray(model, dtype=np.float64)
    _check_dims(point.x, model)
    r = float(model @ point.x) - point.y
    return 0.5 * r * r


def quadratic_gradient(point: DataPoint, model) -> np.ndarray:
    """Gradient of the squared residual: (model . x - y) * x."""
    model = np.asarray(model, dtype=np.float64)
    _check_dims(point.x, model)
    return (float(model @ point.x) - point.y) * point.x


class LossModel(ABC):
    """Per-point loss with gradient and averaged-gradient Jacobian."""

    @abstractmethod
    def loss(self, point: DataPoint, model) -> float: ...

    @abstractmethod
    def gradient_at_point(self, point: DataPoint, model) -> np.ndarray: ...

    @abstractmethod
    def jacobian(self, dataset: Dataset, model) -> np.ndarray:
        """Jacobian of the dataset-averaged gradient at `model`."""


class QuadraticLoss(LossModel):
    def loss(self, point: DataPoint, model) -> float:
        return quadratic_loss(point, model)

    def gradient_at_point(self, point: DataPoint, model) -> np.ndarray:
        return quadratic_gradient(point, model)

    def jacobian(self, dataset: Dataset, model) -> np.ndarray:
        # Constant in the model for a quadratic: the input second moment.
        return empirical_jacobian(dataset)

    def averaged_gradient(self, dataset: Dataset, model) -> np.ndarray:
        """Vectorized mean gradient over the dataset."""
        model = np.asarray(model, dtype=np.float64)
        if model.shape != (dataset.xs.shape[1],):
            raise ValueError("dimension mismatch between model and dataset")
        residuals = dataset.xs @ model - dataset.ys
        return dataset.xs.T @ residuals / len(dataset)


def averaged_gradient(dataset: Dataset, model, loss: LossModel) -> np.ndarray:
    """Mean of per-point gradients over the dataset, in index order."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    fast = getattr(loss, "averaged_gradient", None)
    if fast is not None:
        return fast(dataset, model)
    model = np.asarray(model, dtype=np.float64)
    total = np.zeros_like(model)
    for point in dataset.points:
        total += loss.gradient_at_point(point, model)
    return total / len(dataset)
