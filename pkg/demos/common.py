"""Small shared helpers for the demo scripts."""

from math import comb

import numpy as np

from balmet import GramMetric


def round_gram(k: int) -> GramMetric:
    """The inner product whose pullback is the round sphere metric."""
    return GramMetric(
        np.diag([1.0 / comb(k, j) for j in range(k + 1)]).astype(complex)
    )
