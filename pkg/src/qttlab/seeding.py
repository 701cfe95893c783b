"""Deterministic derivation of per-component random seeds.

Every stochastic stage of a simulation draws from its own
``numpy.random.Generator`` seeded by ``child_seed(master, label, index)``.
Labels name the physical entity served by the stage (``"pairs:A"``,
``"detect:B:signal"``, ``"clock:rb"``), never the site or execution order,
so that adding a component or reordering work cannot disturb any other
component's stream, and relabeling experiments (e.g. swapping sites) maps
onto identical draws.

Mixing function (stable, documented): with all arithmetic modulo 2**64,

    child = splitmix64(splitmix64(master ^ fnv1a64(label)) ^ index)

where ``fnv1a64`` is the FNV-1a hash of the UTF-8 label and ``splitmix64``
is the standard SplitMix64 finalizer.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(z: int) -> int:
    """One SplitMix64 step: advance by the golden gamma and finalize."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def child_seed(master: int, label: str, index: int = 0) -> int:
    """Derive a 64-bit child seed from (master, label, index)."""
    if index < 0:
        raise ValueError("index must be non-negative")
    s = splitmix64((master & _MASK64) ^ fnv1a64(label.encode("utf-8")))
    return splitmix64(s ^ (index & _MASK64))


def generator(master: int, label: str, index: int = 0) -> np.random.Generator:
    """A PCG64 generator seeded by the derived child seed."""
    return np.random.Generator(np.random.PCG64(child_seed(master, label, index)))
