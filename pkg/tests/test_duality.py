"""Averaging map, section density, round trip, and balance residuals."""

from math import comb, factorial, pi

import numpy as np
import pytest

from balmet import (
    GramMetric,
    balanced_residual,
    density_rho,
    fs_metric,
    hilb,
    t_operator,
)
from balmet.duality_maps import density_rho_basis, density_rho_jet
from balmet.hermitian import sample_around

from conftest import get_grid, round_gram, round_metric


def expected_round_gram(k):
    """Independent oracle: radial Beta integrals through the full chain.

    entry_j = (d/V) * 2k * pi * B(j+1, k+1-j) for the round weight and round
    density; the Beta values come from factorials.
    """
    d, V = k + 1, 2 * pi * k
    vals = []
    for j in range(k + 1):
        beta = factorial(j) * factorial(k - j) / factorial(k + 1)
        vals.append((d / V) * 2 * k * pi * beta)
    return np.diag(vals)


@pytest.mark.parametrize("k", range(1, 9))
def test_round_metric_is_balanced(k):
    grid, _ = get_grid("projective_line", k)
    g = hilb(round_metric(grid))
    expect = expected_round_gram(k)
    # oracle self-check: the Beta chain reproduces inverse binomials
    assert np.allclose(np.diag(expect), [1 / comb(k, j) for j in range(k + 1)])
    assert np.max(np.abs(g.matrix - expect)) < 1e-10 * np.max(np.abs(expect))


def test_degree_one_round_gram_is_identity(p1_k1):
    g = hilb(round_metric(p1_k1))
    assert np.max(np.abs(g.matrix - np.eye(2))) < 1e-12


def test_hilb_scale_equivariance(p1_k3):
    m = round_metric(p1_k3)
    g1 = hilb(m)
    g2 = hilb(m.scaled(0.45))
    assert np.max(np.abs(g2.matrix - np.exp(0.45) * g1.matrix)) < 1e-12 * np.exp(0.45)


def test_density_round_is_constant(p1_k4):
    rho = density_rho(round_metric(p1_k4))
    expect = 5 / (2 * pi * 4)
    assert np.max(np.abs(rho - expect)) < 1e-10


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
def test_density_integrates_to_dimension(eps, p1_k3):
    rng = np.random.default_rng(int(10 * eps))
    m = fs_metric(sample_around(round_gram(3), eps, rng), p1_k3)
    rho = density_rho(m)
    assert abs(m.integrate_density(rho) - p1_k3.section_dim) < 1e-8


def test_density_basis_independence(p1_k3):
    rng = np.random.default_rng(2)
    m = fs_metric(sample_around(round_gram(3), 0.5, rng), p1_k3)
    a = density_rho(m)
    b = density_rho_basis(m)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))


@pytest.mark.parametrize("k", [2, 4, 6])
def test_round_trip_fixed_point(k):
    grid, _ = get_grid("projective_line", k)
    h_star = round_gram(k)
    t = t_operator(h_star, grid)
    assert np.max(np.abs(t.matrix - h_star.matrix)) < 1e-10 * np.max(
        np.abs(h_star.matrix)
    )


def test_round_trip_scale_equivariance(p1_k2):
    h_star = round_gram(2)
    t1 = t_operator(h_star, p1_k2)
    t2 = t_operator(h_star.scaled(np.exp(0.3)), p1_k2)
    assert np.max(np.abs(t2.matrix - np.exp(0.3) * t1.matrix)) < 1e-11


def test_every_degree_one_product_is_a_fixed_point(p1_k1):
    # at k = 1 the whole space is the orbit of the round point under the
    # curve's automorphisms, so the round trip is the identity map
    for diag in ([1.0, 2.0], [1.0, 4.0]):
        h = GramMetric(np.diag(diag).astype(complex))
        t = t_operator(h, p1_k1)
        assert np.max(np.abs(t.matrix - h.matrix)) < 1e-12 * max(diag)


def test_balanced_residual_components(p1_k2):
    res = balanced_residual(round_gram(2), p1_k2)
    assert res.rho_flatness < 1e-12
    assert res.map_distance < 1e-12

    rng = np.random.default_rng(6)
    res2 = balanced_residual(sample_around(round_gram(2), 0.5, rng), p1_k2)
    assert res2.rho_flatness > 0.01
    assert res2.map_distance > 0.01


def test_balanced_residual_scale_invariance(p1_k3):
    rng = np.random.default_rng(8)
    h = sample_around(round_gram(3), 0.5, rng)
    r1 = balanced_residual(h, p1_k3)
    r2 = balanced_residual(h.scaled(np.exp(1.2)), p1_k3)
    assert abs(r1.rho_flatness - r2.rho_flatness) < 1e-12 * (1 + r1.rho_flatness)
    assert abs(r1.map_distance - r2.map_distance) < 1e-12 * (1 + r1.map_distance)


def test_round_trip_conjugacy(p1_k3):
    # pulling back the averaged product equals averaging then pulling back:
    # the two composites agree node-wise on weights, by construction
    rng = np.random.default_rng(3)
    h = sample_around(round_gram(3), 0.5, rng)
    lhs = fs_metric(t_operator(h, p1_k3), p1_k3)
    rhs = fs_metric(hilb(fs_metric(h, p1_k3)), p1_k3)
    assert np.max(np.abs(lhs.weight() - rhs.weight())) < 1e-12 * np.max(lhs.weight())


def test_density_two_formula_paths_agree(p1_k3):
    # density via hilb-inverse kernel against the round-trip matrix directly
    rng = np.random.default_rng(4)
    h = sample_around(round_gram(3), 0.5, rng)
    m = fs_metric(h, p1_k3)
    t = t_operator(h, p1_k3)
    rho_a = density_rho(m)
    rho_b = density_rho_jet(m, gram=t, order=0)[(0, 0)].real
    assert np.max(np.abs(rho_a - rho_b)) < 1e-12 * np.max(rho_a)


def test_hilb_refuses_unhealthy_grid(p1_k2):
    import dataclasses

    from balmet.errors import QuadratureError

    broken = dataclasses.replace(p1_k2, self_test={"passed": False, "reason": "test"})
    with pytest.raises(QuadratureError):
        hilb(fs_metric(round_gram(2), broken), broken)


def test_critical_point_of_scale_free_energy(p1_k3):
    # at the balanced point the directional derivative of the scale-free
    # averaged energy vanishes along algebraic directions
    from balmet.functionals import aubin_energy, l_functional
    from balmet.hermitian import random_hermitian, hermitize

    grid = p1_k3
    h_star = round_gram(3)
    m_ref = round_metric(grid)
    rng = np.random.default_rng(12)
    d, V = grid.section_dim, grid.V

    def l_tilde(H):
        m = fs_metric(H, grid)
        return l_functional(m) - (d / V) * aubin_energy(m, m_ref)

    step = 1e-4
    for _ in range(20):
        a = random_hermitian(d, rng)
        a = a / np.max(np.abs(np.linalg.eigvalsh(a)))

        def at(e):
            return l_tilde(GramMetric(hermitize(h_star.matrix + e * a)))

        deriv = (at(step) - at(-step)) / (2 * step)
        deriv = (4 * (at(step / 2) - at(-step / 2)) / step - deriv) / 3
        assert abs(deriv) < 1e-7
