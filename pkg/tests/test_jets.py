"""Jet engine cross-checked against symbolic differentiation."""

import numpy as np
import sympy as sp

from balmet._jets import Jet, PolyTT, RationalTT, kernel_jet, one_plus_tt_jet

T, TB = sp.symbols("t tbar")


def _nodes(n=7, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _check_against(expr, jet, t, tol=1e-9):
    for a in range(jet.order_t + 1):
        for b in range(jet.order_tbar + 1):
            ref = sp.lambdify((T, TB), sp.diff(expr, T, a, TB, b), "numpy")(
                t, np.conj(t)
            )
            ref = np.broadcast_to(np.asarray(ref, dtype=complex), t.shape)
            scale = max(1.0, float(np.max(np.abs(ref))))
            assert np.max(np.abs(jet[(a, b)] - ref)) < tol * scale, (a, b)


def test_polynomial_jet_matches_symbolic():
    t = _nodes()
    p = PolyTT({(0, 0): 2, (1, 1): 1, (2, 1): 0.3 - 0.2j, (1, 2): 0.3 + 0.2j})
    expr = 2 + T * TB + (0.3 - 0.2j) * T**2 * TB + (0.3 + 0.2j) * T * TB**2
    _check_against(expr, p.jet(t, 2), t)


def test_log_exp_reciprocal_and_products():
    t = _nodes(seed=3)
    p = PolyTT({(0, 0): 3, (1, 1): 1, (2, 2): 0.2})
    expr = 3 + T * TB + 0.2 * T**2 * TB**2
    pj = p.jet(t, 2)
    _check_against(sp.log(expr), pj.log(), t)
    _check_against(sp.exp(expr / 10), (pj * 0.1).exp(), t)
    _check_against(1 / expr, pj.reciprocal(), t)
    _check_against(expr * sp.log(expr), pj * pj.log(), t)
    _check_against(expr + expr, pj + pj, t)
    _check_against(expr - 2 * expr, pj - pj * 2.0, t)


def test_kernel_jet_matches_symbolic():
    t = _nodes(seed=5)
    rng = np.random.default_rng(5)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = (m + m.conj().T) / 2 + 4 * np.eye(3)
    Z = np.stack([t**0, t, t**2], 1)
    Z1 = np.stack([0 * t, t**0, 2 * t], 1)
    Z2 = np.stack([0 * t, 0 * t, 2 * t**0], 1)
    kj = kernel_jet([Z, Z1, Z2], m)
    expr = sum(m[i, j] * T**i * TB**j for i in range(3) for j in range(3))
    _check_against(expr, kj, t)


def test_kernel_jet_truncation_order():
    t = _nodes()
    Z = np.stack([t**0, t], 1)
    Z1 = np.stack([0 * t, t**0], 1)
    Z2 = np.stack([0 * t, 0 * t], 1)
    kj = kernel_jet([Z, Z1, Z2], np.eye(2, dtype=complex), order=1)
    assert kj.order_t == 1 and kj.order_tbar == 1


def test_rational_sphere_function():
    t = _nodes(seed=9)
    f = RationalTT(PolyTT({(0, 0): 1, (1, 1): -1}), 1)
    expr = (1 - T * TB) / (1 + T * TB)
    _check_against(expr, f.jet(t, 2), t)


def test_shift_extracts_derivative_components():
    t = _nodes()
    p = PolyTT({(2, 2): 1.0}).jet(t, 2)
    sh = p.shift(1, 1)
    assert np.allclose(sh[(0, 0)], 4 * t * np.conj(t))
    assert np.allclose(sh[(1, 1)], 4.0)


def test_hermitian_coefficient_check():
    assert PolyTT({(1, 0): 1j, (0, 1): -1j}).is_hermitian()
    assert not PolyTT({(1, 0): 1.0}).is_hermitian()


def test_one_plus_tt_jet():
    t = _nodes()
    _check_against(1 + T * TB, one_plus_tt_jet(t, 2), t)
