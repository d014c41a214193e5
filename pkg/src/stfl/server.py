"""Edge-server state machine.

Each epoch the server samples N devices uniformly without replacement,
collects their locally trained models, forms the dataset-size weighted
spatial average, and blends it into the running global model with the
temporal rate of the configured schedule:

    global <- (1 - beta_t) * global + beta_t * spatial_average.

Under the default harmonic schedule beta_t = 1/(t+1) the global model is
exactly the running mean of all spatial averages seen so far (the first
step has beta_0 = 1 and simply adopts the first average).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rng import TAG_SCHEDULE, generator_for

_CONSTANT_RE = re.compile(r"^constant\((?P<value>[^)]+)\)$")


def parse_beta_schedule(name: str) -> Callable[[int], float]:
    """Named temporal-rate schedules.

    "harmonic" is 1/(t+1) (so the first epoch fully adopts the first
    spatial average); "constant(c)" holds the rate at c in (0, 1].
    """
    if name == "harmonic":
        return lambda t: 1.0 / (t + 1.0)
    match = _CONSTANT_RE.match(name)
    if match:
        c = float(match.group("value"))
        if not 0.0 < c <= 1.0:
            raise ValueError(f"constant schedule rate must be in (0, 1], got {c}")
        return lambda t: c
    raise ValueError(f"unknown beta schedule {name!r}")


@dataclass
class GlobalState:
    global_model: np.ndarray
    num_selected: int
    population_size: int
    epoch: int = 0
    beta_schedule: str = "harmonic"
    _beta_fn: Callable[[int], float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.global_model = np.asarray(self.global_model, dtype=np.float64)
        if not 1 <= self.num_selected <= self.population_size:
            raise ValueError(
                f"num_selected must be in [1, {self.population_size}], got {self.num_selected}"
            )
        self._beta_fn = parse_beta_schedule(self.beta_schedule)


@dataclass(frozen=True)
class Upload:
    device_id: int
    local_model: np.ndarray
    dataset_size: int

    def __post_init__(self) -> None:
        if self.dataset_size < 1:
            raise ValueError("dataset_size must be >= 1")


def schedule(state: GlobalState, epoch: int, seed: int, replicate: int = 0) -> np.ndarray:
    """N distinct device ids, uniform without replacement, sorted ascending.

    Keyed by (seed, replicate, epoch): the same epoch always yields the
    same selection, independent of call order.
    """
    if state.num_selected > state.population_size:
        raise ValueError("cannot select more devices than the population holds")
    gen = generator_for(seed, TAG_SCHEDULE, replicate, epoch)
    ids = gen.choice(state.population_size, size=state.num_selected, replace=False)
    return np.sort(ids)


def spatial_aggregate(uploads: list[Upload]) -> np.ndarray:
    """Dataset-size weighted mean of uploaded models.

    Uploads are summed in device-id order so the result is invariant to
    the order in which they arrived.
    """
    if not uploads:
        raise ValueError("no uploads to aggregate")
    ordered = sorted(uploads, key=lambda u: u.device_id)
    dim = np.shape(ordered[0].local_model)
    total = float(sum(u.dataset_size for u in ordered))
    out = np.zeros(dim, dtype=np.float64)
    for u in ordered:
        model = np.asarray(u.local_model, dtype=np.float64)
        if model.shape != dim:
            raise ValueError("uploads have inconsistent dimensions")
        out += (u.dataset_size / total) * model
    return out


def temporal_update(state: GlobalState, spatial_estimate) -> np.ndarray:
    """Blend the spatial estimate into the global model; advances the epoch."""
    est = np.asarray(spatial_estimate, dtype=np.float64)
    if est.shape != state.global_model.shape:
        raise ValueError("spatial estimate dimension mismatch")
    beta = state._beta_fn(state.epoch)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta schedule produced {beta} outside (0, 1] at epoch {state.epoch}")
    state.global_model = (1.0 - beta) * state.global_model + beta * est
    state.epoch += 1
    return state.global_model
