"""Synthetic non-i.i.d. device populations.

Each device owns a private dataset of (x, y) pairs.  Inputs are drawn from
one of a small number of Gaussian mixture components (the device's class),
labels come from a fixed target model, optionally with additive noise.
Everything is a pure function of (population spec, device id, seed):
datasets can be generated lazily, in any order, on any worker, and always
come out bit-identical.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .numerics import cholesky, require_symmetric
from .rng import TAG_CLASS, TAG_DATA, generator_for, keyed_uniform


class DataPoint(NamedTuple):
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian input class: mean, covariance, and selection probability."""

    mean: np.ndarray
    covariance: np.ndarray
    probability: float


@dataclass
class PopulationSpec:
    """Configuration of the whole device population."""

    population_size: int = 10000
    dataset_size: int = 100
    dimension: int = 2
    mixture: list[MixtureComponent] = field(default_factory=list)
    target_model: np.ndarray = field(default_factory=lambda: np.zeros(2))
    label_noise_std: float = 0.0

    def validate(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.dataset_size < 1:
            raise ValueError("dataset_size must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.label_noise_std < 0:
            raise ValueError("label_noise_std must be >= 0")
        if not self.mixture:
            raise ValueError("mixture must have at least one component")
        total = 0.0
        for k, comp in enumerate(self.mixture):
            mean = np.asarray(comp.mean, dtype=np.float64)
            if mean.shape != (self.dimension,):
                raise ValueError(f"mixture[{k}].mean must have length {self.dimension}")
            cov = require_symmetric(comp.covariance, what=f"mixture[{k}].covariance")
            if cov.shape != (self.dimension, self.dimension):
                raise ValueError(f"mixture[{k}].covariance must be {self.dimension}x{self.dimension}")
            cholesky(cov)  # rejects non positive definite covariances
            if not 0.0 <= comp.probability <= 1.0:
                raise ValueError(f"mixture[{k}].probability must be in [0, 1]")
            total += comp.probability
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture probabilities must sum to 1, got {total}")
        target = np.asarray(self.target_model, dtype=np.float64)
        if target.shape != (self.dimension,):
            raise ValueError(f"target_model must have length {self.dimension}")
        if not np.all(np.isfinite(target)):
            raise ValueError("target_model has non-finite entries")


@dataclass
class Dataset:
    """One device's local data, stored as (n, d) inputs and (n,) labels."""

    device_id: int
    xs: np.ndarray
    ys: np.ndarray
    class_label: int
    empirical_covariance: np.ndarray

    @property
    def points(self) -> list[DataPoint]:
        return [DataPoint(self.xs[i], float(self.ys[i])) for i in range(len(self.ys))]

    def __len__(self) -> int:
        return len(self.ys)


def default_population_spec() -> PopulationSpec:
    """The reference two-class 2-D population used throughout.

    Two equally likely Gaussian input classes with distinct means and
    covariances; labels are the noiseless response of the unit target
    (1/sqrt(2)) * [1, -1].
    """
    return PopulationSpec(
        population_size=10000,
        dataset_size=100,
        dimension=2,
        mixture=[
            MixtureComponent(
                mean=np.array([1.0, 1.0]),
                covariance=np.array([[1.0, 1.25], [1.25, 3.0]]),
                probability=0.5,
            ),
            MixtureComponent(
                mean=np.array([2.2, 1.8]),
                covariance=np.array([[2.0, 1.75], [1.75, 2.0]]),
                probability=0.5,
            ),
        ],
        target_model=np.array([1.0, -1.0]) / np.sqrt(2.0),
        label_noise_std=0.0,
    )


def centered_population_spec() -> PopulationSpec:
    """Same classes as the default population but with zero-mean inputs.

    With zero means the input second moment of each class equals its
    covariance, so the realized gradient Jacobians coincide with the class
    matrices the convergence theory is evaluated on.  The figure presets
    use this variant; see analytic_second_moment for the general relation.
    """
    spec = default_population_spec()
    for k, comp in enumerate(spec.mixture):
        spec.mixture[k] = MixtureComponent(
            mean=np.zeros(spec.dimension),
            covariance=comp.covariance.copy(),
            probability=comp.probability,
        )
    return spec


def class_labels(spec: PopulationSpec, seed: int, device_ids=None) -> np.ndarray:
    """Mixture component index per device, keyed by (seed, device id)."""
    if device_ids is None:
        device_ids = np.arange(spec.population_size)
    u = keyed_uniform(seed, (TAG_CLASS,), ids=device_ids)
    edges = np.cumsum([c.probability for c in spec.mixture])
    return np.minimum(np.searchsorted(edges, u, side="right"), len(spec.mixture) - 1)


def generate_dataset(spec: PopulationSpec, device_id: int, seed: int) -> Dataset:
    """Generate (deterministically) the dataset of one device.

    The same (spec, device_id, seed) triple always yields bit-identical
    data regardless of generation order, so datasets may be created lazily
    and cached.
    """
    if not 0 <= device_id < spec.population_size:
        raise ValueError(
            f"device_id {device_id} out of range [0, {spec.population_size})"
        )
    label = int(class_labels(spec, seed, np.array([device_id]))[0])
    comp = spec.mixture[label]
    lower = cholesky(comp.covariance)
    gen = generator_for(seed, TAG_DATA, device_id)
    z = gen.standard_normal((spec.dataset_size, spec.dimension))
    xs = np.asarray(comp.mean, dtype=np.float64) + z @ lower.T
    target = np.asarray(spec.target_model, dtype=np.float64)
    ys = xs @ target
    if spec.label_noise_std > 0.0:
        ys = ys + spec.label_noise_std * gen.standard_normal(spec.dataset_size)
    centered = xs - xs.mean(axis=0)
    emp_cov = centered.T @ centered / len(ys)
    return Dataset(
        device_id=device_id,
        xs=xs,
        ys=ys,
        class_label=label,
        empirical_covariance=emp_cov,
    )


def empirical_jacobian(dataset: Dataset) -> np.ndarray:
    """Input second-moment matrix (1/n) sum_i x_i x_i^T.

    This uncentered moment is the exact Jacobian of the averaged quadratic
    loss gradient on the dataset.  It differs from the centered sample
    covariance whenever inputs have nonzero mean.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    return dataset.xs.T @ dataset.xs / len(dataset)


def analytic_second_moment(component: MixtureComponent) -> np.ndarray:
    """Population second moment of one input class: covariance + mean outer."""
    mean = np.asarray(component.mean, dtype=np.float64)
    cov = np.asarray(component.covariance, dtype=np.float64)
    return cov + np.outer(mean, mean)


class Population:
    """Lazy per-device cache of the quadratic sufficient statistics.

    For the quadratic loss a device's dynamics depend on its dataset only
    through the moment pair (J, b) = ((1/n) X^T X, (1/n) X^T y).  Moments
    are built from generate_dataset on first demand; because generation is
    keyed, concurrent builders always produce identical values (insert-once
    semantics, first writer wins).
    """

    def __init__(self, spec: PopulationSpec, seed: int):
        spec.validate()
        self.spec = spec
        self.seed = seed
        self.labels = class_labels(spec, seed)
        d = spec.dimension
        self._jac = np.zeros((spec.population_size, d, d))
        self._off = np.zeros((spec.population_size, d))
        self._have = np.zeros(spec.population_size, dtype=bool)
        self._lock = threading.Lock()

    def ensure_moments(self, device_ids: np.ndarray) -> None:
        missing = np.asarray(device_ids)[~self._have[device_ids]]
        if missing.size == 0:
            return
        with self._lock:
            for did in missing:
                if self._have[did]:
                    continue
                ds = generate_dataset(self.spec, int(did), self.seed)
                self._jac[did] = empirical_jacobian(ds)
                self._off[did] = ds.xs.T @ ds.ys / len(ds)
                self._have[did] = True

    def moments_for(self, device_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(k, d, d) Jacobians and (k, d) gradient offsets for the ids."""
        self.ensure_moments(device_ids)
        return self._jac[device_ids], self._off[device_ids]


_population_cache: dict = {}
_population_cache_lock = threading.Lock()


def _spec_key(spec: PopulationSpec, seed: int) -> tuple:
    parts: list = [
        spec.population_size,
        spec.dataset_size,
        spec.dimension,
        float(spec.label_noise_std),
        seed,
        tuple(float(v) for v in np.asarray(spec.target_model).ravel()),
    ]
    for comp in spec.mixture:
        parts.append(
            (
                tuple(float(v) for v in np.asarray(comp.mean).ravel()),
                tuple(float(v) for v in np.asarray(comp.covariance).ravel()),
                float(comp.probability),
            )
        )
    return tuple(parts)


def get_population(spec: PopulationSpec, seed: int) -> Population:
    """Process-local memoized Population for (spec, seed)."""
    key = _spec_key(spec, seed)
    with _population_cache_lock:
        pop = _population_cache.get(key)
        if pop is None:
            pop = Population(spec, seed)
            _population_cache[key] = pop
    return pop
