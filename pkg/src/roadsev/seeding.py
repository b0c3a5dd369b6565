"""Deterministic seed derivation for ensemble members."""

import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """A 32-bit seed determined by ``master`` and the member ``keys``.

    Members seeded this way train identically whether they run in sequence
    or in parallel.
    """
    return int(np.random.SeedSequence([master, *keys]).generate_state(1)[0])
