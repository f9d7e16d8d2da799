"""Fiber metrics on the polarization and their pointwise geometry.

A metric is represented by its squared-norm weight against the chart
trivialization; the algebraic family e^c / K(x) with K(x) = z(x) H^-1 z(x)^+
covers everything the balanced-metric theory needs.  All densities and
curvatures come from closed-form jets of K, so node values are exact to
rounding.

Conventions (fixed once, used everywhere):

* the volume density against chart Lebesgue measure is
  rho_vol = -2 d_t d_tbar log(weight), positive on the allowed cone;
* the nonnegative half-Laplacian is  D'f = -(2 / rho_vol) d_t d_tbar f,
  which satisfies  d/dt dmu_t = D'(phi_dot) dmu_t along weight paths
  e^(t phi) and has eigenvalue 2 on the first sphere harmonic at volume 2pi;
* scalar curvature is twice the Gauss curvature,
  S = -(4 / rho_vol) d_t d_tbar log rho_vol, so integral S dmu = 4 pi chi.
"""

from __future__ import annotations

import numpy as np

from ._jets import Jet, kernel_jet
from .errors import DomainError, ValidationError
from .hermitian import GramMetric, hermitize
from .variety import QuadratureGrid, integrate

__all__ = [
    "AlgebraicMetric",
    "fs_metric",
    "blend_metrics",
    "laplacian_half",
    "scalar_curvature",
    "gradient_identity_residual",
    "potential_between",
]


class FiberMetric:
    """Common node-data interface for metric families on one grid.

    Subclasses provide ``log_weight_jet(order)``; density and curvature
    derive from it.  ``order=1`` suffices for densities and integrals,
    ``order=2`` backs the curvature formulas.  Instances are immutable after
    construction and safe to share.
    """

    def __init__(self, grid: QuadratureGrid):
        self.grid = grid
        self._cache = {}

    # -- to be provided by subclasses -------------------------------------
    def log_weight_jet(self, order: int = 2) -> Jet:
        raise NotImplementedError

    # -- derived node data --------------------------------------------------
    def weight(self) -> np.ndarray:
        """Squared-norm multiplier of the chart trivialization at the nodes."""
        if "weight" not in self._cache:
            self._cache["weight"] = np.exp(self.log_weight_jet(0)[(0, 0)].real)
        return self._cache["weight"]

    def density_jet(self) -> Jet:
        """Jet (order (1,1)) of the volume density against chart Lebesgue measure."""
        if "density_jet" not in self._cache:
            self._cache["density_jet"] = self.log_weight_jet(2).shift(1, 1) * (-2.0)
        return self._cache["density_jet"]

    def density(self) -> np.ndarray:
        if "density" not in self._cache:
            rho = (self.log_weight_jet(1).shift(1, 1) * (-2.0))[(0, 0)].real
            if np.min(rho) <= 0.0:
                raise DomainError(
                    "metric leaves the positive cone: volume density <= 0 at a node"
                )
            self._cache["density"] = rho
        return self._cache["density"]

    @property
    def V(self) -> float:
        return self.grid.V

    def volume(self) -> float:
        """Quadrature mass of the density; equals V up to grid accuracy."""
        return integrate(self.grid, self.density())

    def integrate_density(self, values) -> float:
        """Integral of a node function against this metric's volume form."""
        return integrate(self.grid, np.asarray(values) * self.density())


class AlgebraicMetric(FiberMetric):
    """The metric with weight e^c / K(x), K(x) = z(x) H^-1 z(x)^+.

    For any H-orthonormal basis (s_a) the squared norms sum to e^c pointwise;
    c = 0 gives the pulled-back ambient projective metric of H.
    """

    def __init__(self, grid: QuadratureGrid, gram: GramMetric, log_scale: float = 0.0):
        if gram.dim != grid.section_dim:
            raise DomainError(
                f"Gram dimension {gram.dim} != section dimension {grid.section_dim}"
            )
        super().__init__(grid)
        self.gram = gram
        self.log_scale = float(log_scale)
        self._gram_inv = np.linalg.inv(gram.matrix)
        self._gram_inv = hermitize(self._gram_inv)

    def kernel_jet(self, order: int = 2) -> Jet:
        """Jet of K(x) = z(x) H^-1 z(x)^+, truncated at `order`."""
        for have in range(order, 3):
            if ("kernel_jet", have) in self._cache:
                return self._cache[("kernel_jet", have)]
        kj = kernel_jet(self.grid.sections, self._gram_inv, order)
        if np.min(kj[(0, 0)].real) < 1e-300:
            raise DomainError(
                "section kernel vanished at a node (base locus in the data?)"
            )
        self._cache[("kernel_jet", order)] = kj
        return kj

    def log_weight_jet(self, order: int = 2) -> Jet:
        for have in range(order, 3):
            if ("log_weight_jet", have) in self._cache:
                return self._cache[("log_weight_jet", have)]
        lw = self.kernel_jet(order).log() * (-1.0) + self.log_scale
        self._cache[("log_weight_jet", order)] = lw
        return lw

    def scaled(self, alpha: float) -> "AlgebraicMetric":
        """The metric e^alpha * self (same curvature, shifted weight)."""
        m = AlgebraicMetric(self.grid, self.gram, self.log_scale + alpha)
        return m


class _BlendMetric(FiberMetric):
    """Geodesic-in-potential blend: log-weight = (1-t) log w0 + t log w1.

    The volume density interpolates affinely, so the blend stays in the
    positive cone for t in [0, 1].
    """

    def __init__(self, m0: FiberMetric, m1: FiberMetric, t: float):
        if m0.grid is not m1.grid:
            raise ValidationError("blend requires metrics on the same grid")
        super().__init__(m0.grid)
        self._m0, self._m1, self._t = m0, m1, float(t)

    def log_weight_jet(self, order: int = 2) -> Jet:
        t = self._t
        return (
            self._m0.log_weight_jet(order) * (1.0 - t)
            + self._m1.log_weight_jet(order) * t
        )


def blend_metrics(m0: FiberMetric, m1: FiberMetric, t: float) -> FiberMetric:
    """Point t of the weight-geodesic from m0 to m1 (affine log-weights)."""
    return _BlendMetric(m0, m1, t)


class PotentialMetric(FiberMetric):
    """base * e^(scale * phi) for a smooth real potential phi.

    phi is given as a jet source (anything with .jet(coords, order), e.g.
    RationalTT); it must keep the twisted metric inside the positive cone.
    """

    def __init__(self, base: FiberMetric, phi, scale: float = 1.0):
        super().__init__(base.grid)
        self.base = base
        self.phi = phi
        self.scale = float(scale)

    def log_weight_jet(self, order: int = 2) -> Jet:
        key = ("log_weight_jet", order)
        if key not in self._cache:
            pj = self.phi.jet(self.grid.coords, order)
            self._cache[key] = self.base.log_weight_jet(order) + pj * self.scale
        return self._cache[key]


def fs_metric(H: GramMetric, grid: QuadratureGrid) -> AlgebraicMetric:
    """Pull back the ambient projective metric of the inner product H.

    Scale-equivariant: fs_metric of e^alpha H has weight e^alpha times this
    one, node for node.
    """
    return AlgebraicMetric(grid, H, 0.0)


def potential_between(m: FiberMetric, m_ref: FiberMetric) -> np.ndarray:
    """phi with m = e^phi m_ref, evaluated at the nodes (exact, no PDE solve)."""
    if m.grid is not m_ref.grid:
        raise ValidationError("metrics must share a grid")
    return (m.log_weight_jet(0)[(0, 0)] - m_ref.log_weight_jet(0)[(0, 0)]).real


def laplacian_half(m: FiberMetric, f: Jet) -> np.ndarray:
    """Nonnegative half-Laplacian of f: -(2/rho) d_t d_tbar f at the nodes.

    f must carry analytic derivative data to order (1,1); there is no stencil
    fallback.
    """
    if f.order_t < 1 or f.order_tbar < 1:
        raise ValidationError(
            "laplacian_half needs derivative data of order (1,1); "
            "supply an analytic jet"
        )
    return -(2.0 / m.density()) * f[(1, 1)].real


def laplacian_half_jet(m: FiberMetric, f: Jet) -> Jet:
    """Jet of the half-Laplacian (order reduced by one in each slot)."""
    rho_jet = m.density_jet()
    return f.shift(1, 1) * rho_jet.reciprocal() * (-2.0)


def scalar_curvature(m: FiberMetric):
    """Scalar curvature at the nodes and its topological average.

    Returns (S, S_hat) with S = -(4/rho) d_t d_tbar log rho and
    S_hat = 4 pi chi / V; the computed integral of S against dmu matches
    4 pi chi to quadrature accuracy.
    """
    rho_jet = m.density_jet()
    rho = m.density()
    # (1,1) component of log rho from the (1,1) jet of rho
    dd_log = rho_jet.log()[(1, 1)].real
    S = -(4.0 / rho) * dd_log
    chi = m.grid.spec.euler_characteristic
    S_hat = 4.0 * np.pi * chi / m.V
    return S, S_hat


def gradient_identity_residual(m: AlgebraicMetric, f: Jet, H: GramMetric) -> float:
    """Max-norm defect of the pointwise gradient identity

        |grad f|^2 = 2 * sum_a |(grad f, grad s_a)|^2

    for real f, where (s_a) is an H-orthonormal basis, grad s_a is the
    (1,0)-part of the Chern connection and the pairings use the metric pulled
    back from H on both the line and the cotangent directions.
    """
    if m.gram is not H and not np.array_equal(m.gram.matrix, H.matrix):
        raise DomainError("metric was not built from the supplied inner product")
    if f.order_t < 1:
        raise ValidationError("gradient identity needs first derivative data")
    grid = m.grid
    rho = m.density()
    w = m.weight()
    # H-orthonormal coefficient matrix via Cholesky: columns of inv(L)^+ work
    L = np.linalg.cholesky(H.matrix)
    C = np.linalg.inv(L).conj().T
    Z, Z1 = grid.sections[0], grid.sections[1]
    S = Z @ C
    S1 = Z1 @ C
    dlogw = m.log_weight_jet(1)[(1, 0)]
    D = S1 + S * dlogw[:, None]  # Chern (1,0)-derivative in the trivialization

    df = f[(1, 0)]
    dbarf = f[(0, 1)]
    lhs = (4.0 / rho) * (df * dbarf).real
    # (grad f, grad s_a) contracts dbar f against the (1,0) leg: (2/rho) dbar f D_a
    pair2 = (2.0 / rho) ** 2 * (dbarf * np.conj(dbarf)).real
    rhs = 2.0 * pair2 * np.einsum("na,na->n", D, D.conj()).real * w
    return float(np.max(np.abs(lhs - rhs)))
