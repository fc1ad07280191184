"""Deterministic random numbers.

All stochastic pieces of the library draw from Philox, a counter-based
64-bit generator, through the helpers here.  Philox produces the same bit
stream for the same key on every platform, which is what makes screen
ensembles, datasets, and sweep CSVs reproducible byte for byte.

Normal variates are generated by the polar transform

    c = sqrt(-log(1 - u1)) * exp(2*pi*i*u2),   u1, u2 ~ U[0, 1)

so a complex draw has E[c] = 0, E[|c|^2] = 1, E[c^2] = 0 and each real
component has variance 1/2.  The transform is written out here rather than
delegated to Generator.standard_normal so the exact mapping from bits to
values is part of this module's contract.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def philox(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit integer seed."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & _MASK64)))


def complex_standard_normal(seed: int, shape: tuple[int, ...]) -> np.ndarray:
    """Array of iid circular complex normals, CN(0, 1), from a Philox key."""
    rng = philox(seed)
    u = rng.random((2,) + shape)
    # 1 - u1 is in (0, 1], so the log never sees zero
    radius = np.sqrt(-np.log1p(-u[0]))
    return radius * np.exp(2j * np.pi * u[1])


def uniform(seed: int, lo: float, hi: float) -> float:
    """One uniform draw in [lo, hi) from a Philox key."""
    return float(lo + (hi - lo) * philox(seed).random())


def stable_mix(*parts: object) -> int:
    """Collapse a tuple of ints/floats/strings to a stable 64-bit value.

    Used to derive per-(point, trial) seeds in sweeps.  Python's builtin
    hash() is salted per process, so it cannot appear anywhere near seed
    derivation; blake2b of the canonical repr is stable everywhere.
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(base_seed: int, *parts: object) -> int:
    """base_seed XOR stable_mix(parts), masked to 64 bits."""
    return (int(base_seed) ^ stable_mix(*parts)) & _MASK64
