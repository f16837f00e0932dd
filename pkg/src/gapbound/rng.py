"""Deterministic random numbers.

Every stochastic routine in the package draws from a Philox counter-based
generator keyed by an explicit seed, so identical seeds reproduce identical
streams on every platform. Derived seeds (for scan rows, sampler repetitions,
...) are obtained by mixing integer labels into the Philox counter rather
than by ad-hoc arithmetic on the seed itself.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "derive_seed"]

_U64 = np.uint64


def make_rng(seed: int) -> np.random.Generator:
    """Return the package-wide deterministic generator for a seed."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.Philox(key=seed))


def derive_seed(master_seed: int, *labels: int) -> int:
    """Mix integer labels (e.g. system size, replica index) into a child seed.

    The labels are placed in the Philox counter, so distinct label tuples
    select disjoint, reproducible streams of the same keyed generator.
    """
    if master_seed < 0:
        raise ValueError("seed must be non-negative")
    if len(labels) > 4:
        raise ValueError("at most 4 labels can be mixed into one seed")
    counter = [_U64(abs(int(x))) for x in labels] + [_U64(0)] * (4 - len(labels))
    bits = np.random.Philox(key=master_seed, counter=counter)
    return int(np.random.Generator(bits).integers(0, 2**63 - 1, dtype=np.uint64))
