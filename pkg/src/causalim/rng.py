"""Counter-based random streams for reproducible parallel simulation.

Every random decision in the diffusion engines is a pure function of
(master seed, round index, step, node ids), computed with the SplitMix64
finalizer on 64-bit counters.  Two consequences we rely on throughout:

* results never depend on scheduling or worker count, because no stream
  carries mutable state between draws;
* runs that share a seed share the per-pair / per-step coins, which gives
  the nested-seed-set coupling the selection and diffusion tests exercise.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def mix64(x):
    """SplitMix64 finalizer; accepts uint64 scalars or arrays."""
    x = np.uint64(x) if np.isscalar(x) else np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _MIX1
        x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def derive_key(master: int, *parts: int) -> np.uint64:
    """Fold integer labels into a 64-bit stream key."""
    with np.errstate(over="ignore"):
        key = mix64(np.uint64(master & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        for part in parts:
            key = mix64((key ^ np.uint64(part & 0xFFFFFFFFFFFFFFFF)) + _GOLDEN)
    return key


def uniforms(keys, counters):
    """Uniform [0,1) variates indexed by (key, counter) pairs.

    `keys` and `counters` broadcast against each other; each distinct pair
    yields an independent-quality variate.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64((keys ^ mix64(counters * _GOLDEN + _GOLDEN)) + _GOLDEN)
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
