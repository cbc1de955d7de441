import numpy as np
import pytest

from slotmax import ExposureModel


@pytest.fixture
def two_slot_model():
    """Two users; s0 exposes u0 at 0.5, s1 exposes u0 at 0.5 and u1 at 0.4.

    Hand-evaluated: I({s0}) = 0.5, I({s1}) = 0.9,
    I({s0, s1}) = (1 - 0.25) + (1 - 0.6) = 1.15.
    """
    return ExposureModel.from_lists([[(0, 0.5)], [(0, 0.5), (1, 0.4)]], 2)


def random_model(rng, max_slots=12, max_users=8, density=0.5):
    """Small random exposure model for oracle comparisons."""
    n_slots = int(rng.integers(1, max_slots + 1))
    n_users = int(rng.integers(1, max_users + 1))
    rows = []
    for _ in range(n_slots):
        row = []
        for u in range(n_users):
            if rng.random() < density:
                row.append((u, float(rng.uniform(0.05, 0.95))))
        rows.append(row)
    return ExposureModel.from_lists(rows, n_users)


def random_subset(rng, n, max_size=None):
    size = int(rng.integers(0, (max_size or n) + 1))
    if size == 0:
        return []
    return [int(x) for x in rng.choice(n, size=size, replace=False)]
