"""Reproducible random streams.

Every random decision in randlift is drawn from a Philox4x64-10 stream
(numpy's counter-based generator) whose key is a SplitMix64 hash of a
master seed and a tuple of integer coordinates such as ``(i, j)`` for an
edge or ``(trial,)`` for a Monte Carlo trial.  Streams therefore depend
only on their coordinates, never on the order in which they are opened,
which is what makes sequential and parallel runs bit-identical.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    """SplitMix64 output finalizer (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fmix64(z: int) -> int:
    """MurmurHash3 64-bit finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 33)) * 0xFF51AFD7ED558CCD) & MASK64
    z = ((z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53) & MASK64
    return z ^ (z >> 33)


def splitmix64_sequence(seed: int, count: int) -> list[int]:
    """First ``count`` outputs of the reference SplitMix64 generator."""
    out = []
    state = seed & MASK64
    for _ in range(count):
        state = (state + GOLDEN_GAMMA) & MASK64
        out.append(splitmix64_mix(state))
    return out


def derive_seed(seed: int, *coords: int) -> int:
    """Hash a master seed and integer coordinates into a 64-bit subseed.

    The seed passes through the SplitMix64 finalizer; each coordinate is
    hashed with a different finalizer and folded in with one more SplitMix64
    step, so the seed and a coordinate can never cancel each other.
    """
    h = splitmix64_mix((seed & MASK64) + GOLDEN_GAMMA)
    for c in coords:
        if c < 0:
            raise ValueError("stream coordinates must be nonnegative")
        h = splitmix64_mix((h ^ fmix64(c + 1)) + GOLDEN_GAMMA)
    return h


def stream(seed: int, *coords: int) -> np.random.Generator:
    """Independent generator for the substream at ``coords``."""
    return np.random.Generator(np.random.Philox(key=derive_seed(seed, *coords)))


def fisher_yates(k: int, gen: np.random.Generator) -> list[int]:
    """Uniform random permutation of ``1..k`` by the Durstenfeld shuffle.

    Position ``idx`` (counting down from ``k-1``) swaps with a uniform index
    in ``0..idx``; the index is ``floor(u * (idx+1))`` for one double ``u``,
    whose bias is below 2**-50 for any k used here.
    """
    perm = list(range(1, k + 1))
    if k < 2:
        return perm
    u = gen.random(k - 1)
    for step, idx in enumerate(range(k - 1, 0, -1)):
        j = min(int(u[step] * (idx + 1)), idx)
        perm[idx], perm[j] = perm[j], perm[idx]
    return perm
