"""Hypothesis strategies shared across test modules."""

import numpy as np
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2**32 - 1)
small_dims = st.integers(min_value=1, max_value=4)


def complex_matrices(n: int, count: int | None = None):
    """Seeded Gaussian complex matrices (drawn via a seed so shrinking stays cheap)."""

    def build(seed):
        rng = np.random.default_rng(seed)
        shape = (n, n) if count is None else (count, n, n)
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    return seeds.map(build)
