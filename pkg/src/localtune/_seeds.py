"""Deterministic seed derivation.

Every stochastic component gets its own child seed derived from the master
seed plus a stable path of integers, so results do not depend on the order
in which components happen to run (sequential vs. worker-pool execution).
"""

import numpy as np

# component codes used as derivation path heads
GAP = 1
KMEANS = 2
CLUSTER_TUNE = 3
FOLDS = 5
TUNE_SPLIT = 6
EXPERIMENT = 7


def derive_seed(master: int, *path: int) -> int:
    """Derive a child seed from ``master`` and a path of component codes."""
    entropy = [int(master) & 0xFFFFFFFF] + [int(p) & 0xFFFFFFFF for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
