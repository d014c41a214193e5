"""Keyed, counter-based random streams.

Every random draw in the simulator is addressed by a key path such as
(seed, purpose, replicate, epoch, device_id) instead of consuming a shared
sequential stream.  This makes each draw a pure function of its key, so
results are identical no matter how work is partitioned across workers or
in which order devices are processed.

Scalar keys are folded into a 64-bit state with the splitmix64 finalizer,
which is a well-studied avalanching mix.  Bulk uniforms come straight from
the hash; draws that need full Generator support (Gaussians, sampling
without replacement) get a numpy Philox generator keyed by the same hash.
"""

from __future__ import annotations

import numpy as np

# Stream purposes.  Values are arbitrary but fixed: changing them changes
# every simulation output.
TAG_CLASS = 1
TAG_DATA = 2
TAG_OUTAGE = 3
TAG_SCHEDULE = 4
TAG_CONTRACTION = 5

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix64(h: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    with np.errstate(over="ignore"):
        h = h ^ (h >> np.uint64(30))
        h = h * _MIX1
        h = h ^ (h >> np.uint64(27))
        h = h * _MIX2
        return h ^ (h >> np.uint64(31))


def keyed_hash(seed: int, parts: tuple[int, ...], ids=None) -> np.ndarray:
    """Hash (seed, *parts[, ids]) to uint64.

    `ids` may be an integer array; the result then has the same shape with
    one independent hash per id.  Without `ids` the result is a 0-d array.
    """
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(seed & _MASK) + _GOLDEN)
        for part in parts:
            h = _mix64(h ^ (np.uint64(int(part) & _MASK) + _GOLDEN))
        if ids is not None:
            ids64 = np.asarray(ids, dtype=np.uint64)
            h = _mix64(h ^ (ids64 + _GOLDEN))
    return h


def keyed_uniform(seed: int, parts: tuple[int, ...], ids=None):
    """Uniform draws in [0, 1), one per id (or a scalar without ids)."""
    h = keyed_hash(seed, parts, ids)
    u = (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    if ids is None:
        return float(u)
    return u


def generator_for(seed: int, *parts: int) -> np.random.Generator:
    """A numpy Generator on an independent Philox stream for this key."""
    k1 = int(keyed_hash(seed, tuple(parts)))
    k2 = int(_mix64(np.uint64(k1) ^ _GOLDEN))
    return np.random.Generator(np.random.Philox(key=(k2 << 64) | k1))
