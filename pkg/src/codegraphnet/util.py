"""Small shared helpers."""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def rng(*seed_parts: int) -> np.random.Generator:
    """A PCG64 generator from one or more 64-bit seed integers.

    Negative seeds are folded into unsigned form so the full signed 64-bit
    range is accepted.
    """
    return np.random.default_rng([part & _MASK64 for part in seed_parts])
