"""Deterministic seed derivation.

All randomness in the library flows from explicit 64-bit seeds. Derived
streams (per bootstrap sample, per selector, per tree) are produced by
hashing the base seed together with integer indices through splitmix64,
so results are independent of scheduling and reproducible across platforms.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1

#: Fixed default seed used by the CLI when none is given (never wall-clock).
DEFAULT_SEED = 1729

#: Odd offset added to a seed when a bootstrap draw leaves an empty test set.
RESEED_OFFSET = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def derive_seed(base: int, *parts: int) -> int:
    """Mix ``base`` with any number of integer indices into a fresh 64-bit seed."""
    state = splitmix64(base & _MASK)
    for p in parts:
        state = splitmix64(state ^ (p & _MASK))
    return state
