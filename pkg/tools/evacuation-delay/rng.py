"""
Seeded random streams for reproducible simulations.

Every stochastic operation takes an explicit numpy Generator. Runs derive
independent child streams from one integer seed with SeedSequence, so
adding draws to one stream never shifts the draws of another.
"""

import numpy as np

# Named child streams used by one simulation replication
SIM_STREAMS = ("placement", "arrivals", "channels", "network", "service", "handover", "retune")


def make_rng(seed):
    """Generator for an integer seed (or pass an existing Generator through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed, n):
    """
    Derive n independent integer seeds from a run seed.

    Args:
        seed: Run seed
        n: Number of child seeds

    Returns:
        List of n ints, identical for identical (seed, n)
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


class SeedStreams:
    """Named, independent Generators derived from one replication seed."""

    def __init__(self, seed, names=SIM_STREAMS):
        children = np.random.SeedSequence(seed).spawn(len(names))
        self._streams = {name: np.random.default_rng(child) for name, child in zip(names, children)}

    def __getitem__(self, name):
        return self._streams[name]
