"""Named random streams derived from one integer seed."""
import numpy as np

STREAMS = {"split": 1, "init": 2, "shuffle": 3, "dropout": 4, "validation": 5, "data": 6}


def rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS[stream]]))
