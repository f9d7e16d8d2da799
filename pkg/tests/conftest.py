"""Shared fixtures: cached geometries and seeded sampling helpers."""

import numpy as np
import pytest
from math import comb

from balmet import GeometrySpec, GramMetric, build_geometry, fs_metric

FERMAT = {(3, 0, 0): 1, (0, 3, 0): 1, (0, 0, 3): 1}

_GRID_CACHE = {}


def get_grid(kind, k, resolution=None, coeffs=None):
    key = (kind, k, resolution)
    if key not in _GRID_CACHE:
        spec = GeometrySpec(
            kind=kind,
            k=k,
            quadrature_resolution=resolution,
            cubic_coefficients=coeffs or (FERMAT if kind == "plane_cubic" else None),
        )
        _GRID_CACHE[key] = build_geometry(spec)
    return _GRID_CACHE[key]


def round_gram(k):
    return GramMetric(np.diag([1.0 / comb(k, j) for j in range(k + 1)]).astype(complex))


def round_metric(grid):
    return fs_metric(round_gram(grid.k), grid)


@pytest.fixture(scope="session")
def p1_k1():
    return get_grid("projective_line", 1)[0]


@pytest.fixture(scope="session")
def p1_k2():
    return get_grid("projective_line", 2)[0]


@pytest.fixture(scope="session")
def p1_k3():
    return get_grid("projective_line", 3)[0]


@pytest.fixture(scope="session")
def p1_k4():
    return get_grid("projective_line", 4)[0]


@pytest.fixture(scope="session")
def p1_k6():
    return get_grid("projective_line", 6)[0]


@pytest.fixture(scope="session")
def cubic_k1():
    return get_grid("plane_cubic", 1, resolution=(160, 96))[0]


@pytest.fixture(scope="session")
def cubic_k2():
    return get_grid("plane_cubic", 2, resolution=(160, 96))[0]
