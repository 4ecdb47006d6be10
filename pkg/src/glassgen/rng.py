"""Counter-based random numbers for scheduling-independent rendering.

Every uniform is a pure function of (seed, stream ids...), so results do
not depend on tile order, worker count or batch composition. The mixer is
splitmix64-style finalization over a combination of the id words.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / float(1 << 53)


def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def hash_u64(*words):
    """Combine integer words (scalars or arrays) into mixed uint64s."""
    with np.errstate(over="ignore"):
        h = np.uint64(0)
        for w in words:
            h = _mix((np.asarray(w).astype(np.uint64) + _GOLDEN) ^ (h * _MIX1 + _GOLDEN))
        return h


def uniform(*words):
    """Uniform float64 in [0, 1), one per broadcast element of the id words."""
    return (hash_u64(*words) >> np.uint64(11)).astype(np.float64) * _INV53


def stream_key(seed, pixel_ids, sample_ids):
    """Per-ray key; uniforms for dimension d come from `uniform_from_key`."""
    return hash_u64(seed, pixel_ids, sample_ids)


def uniform_from_key(key, dim: int):
    """Uniform float64 in [0, 1) for one dimension of a keyed stream."""
    with np.errstate(over="ignore"):
        h = _mix(key ^ (np.uint64(dim) * _GOLDEN + _GOLDEN))
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def derive_seed(base_seed: int, index: int) -> int:
    """Stable per-sample seed from a base seed and sample index."""
    return int(hash_u64(np.uint64(base_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)))
