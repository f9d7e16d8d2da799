"""Pointwise metric geometry: weights, densities, curvature, Laplacian."""

from math import pi

import numpy as np
import pytest
import sympy as sp

from balmet import (
    DomainError,
    GramMetric,
    ValidationError,
    fs_metric,
    gradient_identity_residual,
    laplacian_half,
    potential_between,
    scalar_curvature,
)
from balmet._jets import PolyTT, RationalTT
from balmet.hermitian import sample_around

from conftest import get_grid, round_gram, round_metric


def first_harmonic_jet(grid):
    # (1 - |t|^2) / (1 + |t|^2): the first nontrivial sphere harmonic
    return RationalTT(PolyTT({(0, 0): 1, (1, 1): -1}), 1).jet(grid.coords, 2)


def seeded_function_jet(grid, seed, power=2):
    rng = np.random.default_rng(seed)
    coeffs = {}
    for a in range(power + 1):
        for b in range(a, power + 1):
            c = rng.standard_normal() + 1j * rng.standard_normal() * (a != b)
            coeffs[(a, b)] = c
            coeffs[(b, a)] = np.conj(c)
    return RationalTT(PolyTT(coeffs), power).jet(grid.coords, 2)


# ----------------------------------------------------------------------------
# weights and densities


@pytest.mark.parametrize("k", [1, 3, 5])
def test_round_weight_is_binomial_kernel(k):
    grid, _ = get_grid("projective_line", k)
    m = round_metric(grid)
    near = np.abs(grid.coords) <= 1.0  # untwisted trivialization
    r2 = np.abs(grid.coords[near]) ** 2
    expect = (1 + r2) ** (-k)
    got = m.weight()[near]
    assert np.max(np.abs(got - expect) / expect) < 1e-12


def test_weight_scale_equivariance(p1_k3):
    H = round_gram(3)
    m1 = fs_metric(H, p1_k3)
    m2 = fs_metric(H.scaled(np.exp(0.8)), p1_k3)
    assert np.max(np.abs(m2.weight() / m1.weight() - np.exp(0.8))) < 1e-12


def test_round_density_closed_form(p1_k1):
    m = round_metric(p1_k1)
    r2 = np.abs(p1_k1.coords) ** 2
    assert np.max(np.abs(m.density() - 2 / (1 + r2) ** 2)) < 1e-12


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
def test_volume_conserved_across_the_family(eps, p1_k4):
    rng = np.random.default_rng(int(eps * 10))
    for _ in range(5):
        H = sample_around(round_gram(4), eps, rng)
        m = fs_metric(H, p1_k4)
        assert abs(m.volume() - p1_k4.V) < 1e-8 * p1_k4.V


def test_potential_between_scaled_metrics(p1_k2):
    m = round_metric(p1_k2)
    assert np.max(np.abs(potential_between(m.scaled(0.6), m) - 0.6)) < 1e-12


def test_density_positivity_guard(p1_k1):
    # a potential too large for the cone must be rejected when densities are used
    from balmet.metrics import PotentialMetric

    phi = RationalTT(PolyTT({(0, 0): 1, (1, 1): -1}), 1)
    bad = PotentialMetric(round_metric(p1_k1), phi, scale=5.0)
    with pytest.raises(DomainError):
        bad.density()


# ----------------------------------------------------------------------------
# half-Laplacian


def test_laplacian_kills_constants(p1_k2):
    m = round_metric(p1_k2)
    f = RationalTT(PolyTT({(0, 0): 3.7}), 0).jet(p1_k2.coords, 2)
    assert np.max(np.abs(laplacian_half(m, f))) < 1e-14


def test_laplacian_self_adjoint(p1_k3):
    m = round_metric(p1_k3)
    f = seeded_function_jet(p1_k3, 1)
    g = seeded_function_jet(p1_k3, 2)
    lhs = m.integrate_density(g[(0, 0)].real * laplacian_half(m, f))
    rhs = m.integrate_density(f[(0, 0)].real * laplacian_half(m, g))
    scale = max(abs(lhs), abs(rhs), 1.0)
    assert abs(lhs - rhs) < 1e-7 * scale


def test_laplacian_mean_zero(p1_k3):
    rng = np.random.default_rng(8)
    m = fs_metric(sample_around(round_gram(3), 0.5, rng), p1_k3)
    f = seeded_function_jet(p1_k3, 3)
    val = m.integrate_density(laplacian_half(m, f))
    fmax = np.max(np.abs(f[(0, 0)].real))
    assert abs(val) < 1e-7 * fmax * m.V


def test_laplacian_nonnegative_quadratic_form(p1_k3):
    m = round_metric(p1_k3)
    for seed in range(6):
        f = seeded_function_jet(p1_k3, seed)
        fv = f[(0, 0)].real
        q = m.integrate_density(fv * laplacian_half(m, f))
        assert q >= -1e-9 * m.integrate_density(fv**2)


def test_first_harmonic_eigenvalue(p1_k1):
    # the volume-variation operator has eigenvalue 2 on the first harmonic
    # at class volume 2 pi (half the rough Laplacian's 4)
    m = round_metric(p1_k1)
    f = first_harmonic_jet(p1_k1)
    lap = laplacian_half(m, f)
    assert np.max(np.abs(lap - 2 * f[(0, 0)].real)) < 1e-9


def test_first_harmonic_against_symbolic_oracle(p1_k1):
    # independent oracle: -(2/rho) d_t d_tbar f via sympy on the round density
    t, tb = sp.symbols("t tbar")
    f = (1 - t * tb) / (1 + t * tb)
    rho = 2 / (1 + t * tb) ** 2
    lap_expr = sp.simplify(-(2 / rho) * sp.diff(f, t, 1, tb, 1))
    oracle = sp.lambdify((t, tb), lap_expr, "numpy")(
        p1_k1.coords, np.conj(p1_k1.coords)
    ).real
    m = round_metric(p1_k1)
    lap = laplacian_half(m, first_harmonic_jet(p1_k1))
    assert np.max(np.abs(lap - oracle)) < 1e-9


def test_laplacian_requires_derivative_data(p1_k1):
    from balmet._jets import Jet

    m = round_metric(p1_k1)
    values_only = Jet({(0, 0): np.ones(p1_k1.total_nodes, dtype=complex)}, 0, 0)
    with pytest.raises(ValidationError):
        laplacian_half(m, values_only)


# ----------------------------------------------------------------------------
# scalar curvature


@pytest.mark.parametrize("k", [1, 3, 6])
def test_round_scalar_curvature_constant(k):
    grid, _ = get_grid("projective_line", k)
    s, s_hat = scalar_curvature(round_metric(grid))
    assert np.max(np.abs(s - 4.0 / k)) < 1e-8
    assert np.std(s) < 1e-6
    assert np.isclose(s_hat, 4.0 / k)


def test_gauss_bonnet_on_the_sphere(p1_k2):
    rng = np.random.default_rng(9)
    m = fs_metric(sample_around(round_gram(2), 0.5, rng), p1_k2)
    s, _ = scalar_curvature(m)
    total = m.integrate_density(s)
    assert abs(total - 8 * pi) < 1e-5 * 8 * pi  # 4 pi chi, chi = 2


def test_gauss_bonnet_on_the_cubic(cubic_k2):
    m = fs_metric(GramMetric.identity(cubic_k2.section_dim), cubic_k2)
    s, s_hat = scalar_curvature(m)
    assert s_hat == 0.0
    assert abs(m.integrate_density(s)) < 1e-4 * cubic_k2.V


# ----------------------------------------------------------------------------
# gradient identity


def test_gradient_identity_constant(p1_k2):
    H = round_gram(2)
    m = fs_metric(H, p1_k2)
    f = RationalTT(PolyTT({(0, 0): 2.0}), 0).jet(p1_k2.coords, 2)
    assert gradient_identity_residual(m, f, H) < 1e-14


def test_gradient_identity_low_harmonic(p1_k1):
    H = round_gram(1)
    m = fs_metric(H, p1_k1)
    f = first_harmonic_jet(p1_k1)
    scale = np.max((4 / m.density()) * np.abs(f[(1, 0)]) ** 2)
    assert gradient_identity_residual(m, f, H) < 1e-8 * scale


@pytest.mark.parametrize("seed", range(5))
def test_gradient_identity_seeded(seed, p1_k3):
    rng = np.random.default_rng(seed + 100)
    H = sample_around(round_gram(3), (0.1, 0.5, 1.0)[seed % 3], rng)
    m = fs_metric(H, p1_k3)
    f = seeded_function_jet(p1_k3, seed + 50)
    scale = max(np.max((4 / m.density()) * np.abs(f[(1, 0)]) ** 2), 1e-10)
    assert gradient_identity_residual(m, f, H) < 1e-8 * scale


def test_gradient_identity_requires_matching_gram(p1_k2):
    m = fs_metric(round_gram(2), p1_k2)
    f = first_harmonic_jet(p1_k2)
    with pytest.raises(DomainError):
        gradient_identity_residual(m, f, GramMetric.identity(3))
