"""Large-power experiments: section density expansion and energy convergence.

A test metric is fixed once as a smooth potential against the round metric
and re-embedded at every polarization power k.  As k grows, the centered
combination of the section density and its half-Laplacian tracks the centered
scalar curvature, and rescaled differences of the scale-free averaged energy
converge to differences of the K-energy.

Constants are pinned to this package's conventions (volume 2 pi k deg,
S = twice the Gauss curvature, density normalized to integrate to d): the
density expansion reads

    [D' rho_k + k rho_k] ~ (k / 8 pi) [S],      (n = 1)

and correspondingly (8 pi / k) * (L_tilde_k differences) approach K-energy
differences.  Both are exercised as decreasing-trend sweeps.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import comb, pi

import numpy as np

from ._jets import PolyTT, RationalTT
from .errors import ValidationError
from .hermitian import GramMetric
from .metrics import PotentialMetric, fs_metric, scalar_curvature
from .duality_maps import density_rho_jet
from .functionals import aubin_energy, l_functional, mabuchi
from .variety import GeometrySpec, QuadratureGrid, build_geometry, integrate

__all__ = [
    "SpherePotential",
    "default_test_potential",
    "bergman_residual",
    "mabuchi_approximation_gap",
    "AsymptoticSweep",
    "run_sweep",
]

_MAB_CARRIER_K = 2  # fixed small power whose grid carries the K-energy oracle


class SpherePotential:
    """A smooth real function on the sphere: num(t, tbar) / (1 + |t|^2)^p.

    Wraps RationalTT with a Hermitian-coefficient check and convenience
    algebra for scaling.
    """

    def __init__(self, coeffs: dict, power: int):
        poly = PolyTT(coeffs)
        if not poly.is_hermitian():
            raise ValidationError("potential coefficients must be Hermitian")
        deg = max((max(a, b) for (a, b) in poly.coeffs), default=0)
        if deg > power:
            raise ValidationError("numerator bidegree must not exceed the power")
        self._rational = RationalTT(poly, power)
        self.coeffs = dict(poly.coeffs)
        self.power = power

    def jet(self, coords, order: int = 2):
        return self._rational.jet(coords, order)

    def scaled(self, c: float) -> "SpherePotential":
        return SpherePotential(
            {k: c * v for k, v in self.coeffs.items()}, self.power
        )


def default_test_potential(eps: float = 0.3) -> SpherePotential:
    """The sweep's stock perturbation: a zonal blend with l >= 2 content."""
    # (1 - u)^2 / (1 + u)^2 plus a small tesseral piece, u = |t|^2
    return SpherePotential(
        {
            (0, 0): eps,
            (1, 1): -2 * eps,
            (2, 2): eps,
            (1, 0): 0.25 * eps,
            (0, 1): 0.25 * eps,
        },
        2,
    )


def _round_gram(k: int) -> GramMetric:
    return GramMetric(np.diag([1.0 / comb(k, j) for j in range(k + 1)]).astype(complex))


def _level_metric(grid: QuadratureGrid, phi: SpherePotential):
    base = fs_metric(_round_gram(grid.k), grid)
    if phi is None:
        return base
    return PotentialMetric(base, phi, scale=float(grid.k))


def build_power_grid(k: int, resolution: tuple = None) -> QuadratureGrid:
    spec = GeometrySpec("projective_line", k, quadrature_resolution=resolution)
    return build_geometry(spec)[0]


def bergman_residual(k: int, phi: SpherePotential, grid: QuadratureGrid = None) -> float:
    """Sup-norm distance of the centered density combination from the
    centered curvature target, in the fixed-class normalization.

    Vanishes identically for the round metric; decreases with k for a fixed
    smooth potential.
    """
    if k < 1:
        raise ValidationError("power k must be >= 1")
    grid = grid if grid is not None else build_power_grid(k)
    m = _level_metric(grid, phi)
    rho_jet = density_rho_jet(m, order=1)
    rho = rho_jet[(0, 0)].real
    lap_rho = -(2.0 / m.density()) * rho_jet[(1, 1)].real
    s, _ = scalar_curvature(m)
    mu = m.density() * grid.weights
    mass = float(np.sum(mu))

    def centered(g):
        return g - float(np.sum(g * mu)) / mass

    resid = centered(lap_rho + rho) - centered(s) / (8 * pi)
    return float(k * np.max(np.abs(resid)))


def _mabuchi_difference(phi0, phi1, steps: int = 48) -> float:
    """K-energy difference of the two potentials in the fixed class."""
    grid = build_power_grid(_MAB_CARRIER_K)
    m0 = _level_metric(grid, phi0)
    m1 = _level_metric(grid, phi1)
    return mabuchi(m1, m0, steps=steps) / grid.k


def mabuchi_approximation_gap(
    k: int,
    phi0: SpherePotential,
    phi1: SpherePotential,
    grid: QuadratureGrid = None,
    mabuchi_value: float = None,
) -> float:
    """| (8 pi / k) (L_tilde_k(h1) - L_tilde_k(h0)) - (M(h1) - M(h0)) |.

    The additive normalizations of both sides cancel in the differences.
    """
    grid = grid if grid is not None else build_power_grid(k)
    d, V = grid.section_dim, grid.V
    vals = []
    for phi in (phi0, phi1):
        m = _level_metric(grid, phi)
        ref = _level_metric(grid, None)
        vals.append(l_functional(m) - (d / V) * aubin_energy(m, ref))
    dm = (
        mabuchi_value
        if mabuchi_value is not None
        else _mabuchi_difference(phi0, phi1)
    )
    return float(abs((8 * pi / k) * (vals[1] - vals[0]) - dm))


@dataclass
class AsymptoticSweep:
    """Per-power results for one fixed pair of potentials."""

    k_values: tuple
    bergman_residuals: tuple
    mabuchi_gaps: tuple
    mabuchi_difference: float
    geometry_kind: str = "projective_line"
    potential_pair: tuple = ("round", "perturbed")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "bergman_residual", "mabuchi_gap"])
        for k, b, g in zip(self.k_values, self.bergman_residuals, self.mabuchi_gaps):
            writer.writerow([k, repr(b), repr(g)])
        return buf.getvalue()

    def final_relative_gap(self) -> float:
        return self.mabuchi_gaps[-1] / abs(self.mabuchi_difference)

    def non_increasing(self, allow_first_inversion: bool = True) -> bool:
        """Both sequences decrease; one inversion at the smallest k tolerated."""
        for seq in (self.bergman_residuals, self.mabuchi_gaps):
            bad = [i for i in range(len(seq) - 1) if seq[i + 1] > seq[i]]
            if bad and not (allow_first_inversion and bad == [0]):
                return False
        return True


def run_sweep(
    k_values,
    phi: SpherePotential = None,
    phi_base: SpherePotential = None,
    resolution: tuple = None,
) -> AsymptoticSweep:
    """Evaluate both trend quantities over increasing powers for one fixed
    pair of potentials (phi_base defaults to the round metric)."""
    ks = tuple(int(k) for k in k_values)
    if len(ks) < 2 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("k_values must be strictly increasing, >= 2 entries")
    phi = phi if phi is not None else default_test_potential()
    dm = _mabuchi_difference(phi_base, phi)
    bergs, gaps = [], []
    for k in ks:
        grid = build_power_grid(k, resolution)
        bergs.append(bergman_residual(k, phi, grid))
        gaps.append(
            mabuchi_approximation_gap(k, phi_base, phi, grid, mabuchi_value=dm)
        )
    def describe(p):
        if p is None:
            return "round"
        return f"rational(power={p.power}, {len(p.coeffs)} terms)"

    return AsymptoticSweep(
        k_values=ks,
        bergman_residuals=tuple(bergs),
        mabuchi_gaps=tuple(gaps),
        mabuchi_difference=dm,
        potential_pair=(describe(phi_base), describe(phi)),
    )
