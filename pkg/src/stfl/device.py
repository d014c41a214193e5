"""Mobile-device state machine.

Per training epoch a device draws its delivery outage, refreshes its
running estimate of the global model (the compensator), and, if scheduled,
takes one full-gradient step from whichever model it has: the received
global model, or the compensator when delivery failed.

The compensator is an exponentially weighted moving average over the best
information available at each past epoch (received global model if any,
otherwise the device's own previous local model):

    comp <- omega * comp + (1 - omega) * u_t,
    u_t  =  global model   if received this epoch,
            previous local model otherwise.

With omega = 0 the estimate degenerates to the most recent available
model.  The accumulator starts at the zero vector: the weighted history is
empty before the first epoch, so an early outage blends toward zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .datagen import Dataset
from .lossmodel import LossModel, averaged_gradient
from .rng import TAG_OUTAGE, keyed_uniform


@dataclass
class DeviceState:
    device_id: int
    local_model: np.ndarray
    compensator: np.ndarray
    alpha: float
    outage_prob: float
    omega: float
    last_outage_flag: bool = False
    dataset: Dataset | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.outage_prob <= 1.0:
            raise ValueError(f"outage_prob must be in [0, 1], got {self.outage_prob}")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must be in [0, 1), got {self.omega}")
        # alpha = 0 is admitted as a degenerate value for identity checks.
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        self.local_model = np.asarray(self.local_model, dtype=np.float64)
        self.compensator = np.asarray(self.compensator, dtype=np.float64)
        if self.local_model.shape != self.compensator.shape:
            raise ValueError("local_model and compensator dimensions differ")


def draw_outage(state: DeviceState, epoch: int, seed: int, replicate: int = 0) -> bool:
    """True when the broadcast arrives; False on outage.

    The draw is keyed by (seed, replicate, epoch, device id), so it is
    reproducible in isolation and identical to the vectorized draw the
    experiment engine performs for the whole population.
    """
    u = keyed_uniform(seed, (TAG_OUTAGE, replicate, epoch), ids=np.array([state.device_id]))
    return bool(u[0] >= state.outage_prob)


def update_compensator(
    state: DeviceState,
    gamma: bool,
    global_model_if_received=None,
    prev_local_model=None,
) -> np.ndarray:
    """Advance the compensator one epoch; returns (and stores) the new value."""
    if gamma:
        if global_model_if_received is None:
            raise ValueError("gamma=1 requires the received global model")
        u = np.asarray(global_model_if_received, dtype=np.float64)
    else:
        u = state.local_model if prev_local_model is None else np.asarray(prev_local_model, dtype=np.float64)
    if u.shape != state.compensator.shape:
        raise ValueError("dimension mismatch in compensator update")
    state.compensator = state.omega * state.compensator + (1.0 - state.omega) * u
    return state.compensator


def local_update(
    state: DeviceState,
    gamma: bool,
    global_model_if_received,
    loss: LossModel,
) -> np.ndarray:
    """One local training step; call after update_compensator for the epoch.

    The device steps from the received global model when delivery
    succeeded and from its compensator otherwise.
    """
    if state.dataset is None:
        raise ValueError("device has no dataset attached")
    if gamma:
        if global_model_if_received is None:
            raise ValueError("gamma=1 requires the received global model")
        base = np.asarray(global_model_if_received, dtype=np.float64)
        if base.shape != state.local_model.shape:
            raise ValueError("dimension mismatch between global and local model")
    else:
        base = state.compensator
    grad = averaged_gradient(state.dataset, base, loss)
    state.local_model = base - state.alpha * grad
    state.last_outage_flag = not gamma
    return state.local_model


class DeltaEstimate(NamedTuple):
    """Tightest observed compensation-quality ratio.

    value bounds E||global - compensator||^2 / E||local - target||^2 over
    the recorded epochs; unbounded flags an epoch with zero local error but
    nonzero compensation gap (the ratio is undefined there).
    """

    value: float
    unbounded: bool


def estimate_delta(global_models, compensators, local_models, target) -> DeltaEstimate:
    """Empirical compensation-quality bound from a recorded history.

    Inputs are aligned per epoch: arrays of shape (T, d) for a single run
    or (T, R, d) with a replicate axis; expectations are taken across the
    replicate axis when present.
    """
    g = np.asarray(global_models, dtype=np.float64)
    c = np.asarray(compensators, dtype=np.float64)
    l = np.asarray(local_models, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if g.shape != c.shape or g.shape[0] != l.shape[0]:
        raise ValueError("history arrays have inconsistent shapes")
    if g.ndim == 2:
        g, c, l = g[:, None, :], c[:, None, :], l[:, None, :]
    if g.shape[0] < 1:
        raise ValueError("history must cover at least one epoch")
    num = np.mean(np.sum((g - c) ** 2, axis=-1), axis=1)
    den = np.mean(np.sum((l - t) ** 2, axis=-1), axis=1)
    return delta_from_series(num, den)


def delta_from_series(numerator, denominator) -> DeltaEstimate:
    """Max per-epoch ratio of precomputed mean-squared series."""
    num = np.asarray(numerator, dtype=np.float64)
    den = np.asarray(denominator, dtype=np.float64)
    if num.shape != den.shape:
        raise ValueError("series lengths differ")
    zero_den = den <= 0.0
    if np.any(zero_den & (num > 0.0)):
        return DeltaEstimate(math.inf, True)
    usable = ~zero_den
    if not np.any(usable):
        return DeltaEstimate(0.0, False)
    return DeltaEstimate(float(np.max(num[usable] / den[usable])), False)
