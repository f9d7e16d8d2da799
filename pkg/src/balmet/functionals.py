"""The energy ladder on metrics and inner products.

All functionals defined only up to an additive constant are exposed as
differences against a declared reference metric; with one reference fixed the
scale-free combinations below satisfy their defining identities exactly as
computed, with no floating constants.

Summary of the ladder (h a fiber metric, H an inner product, d sections,
V the class volume):

* aubin_energy:      dI/dt = integral of phi_dot against dmu, exact two-point
                     rule along weight-geodesics;
* l_functional:      log det of hilb(h);
* z_functional:      minus aubin_energy of the pullback metric of H;
* tilde_pair:        scale-invariant corrections of the two above;
* p_potential:       log trace of hilb(h) against H, with its scale-free form;
* mabuchi:           K-energy, integrated from its defining variation
                     (S - S_hat) phi_dot along the weight path;
* fs_projection_gap / hilb_projection_gap: the two one-sided inequalities
                     that force the round trip downhill.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import NumericalError, ValidationError
from .hermitian import GramMetric, hermitize, log_det
from .metrics import (
    AlgebraicMetric,
    FiberMetric,
    blend_metrics,
    fs_metric,
    potential_between,
    scalar_curvature,
)
from .duality_maps import density_rho_jet, hilb
from .variety import QuadratureGrid, integrate

__all__ = [
    "aubin_energy",
    "i_functional",
    "l_functional",
    "z_functional",
    "tilde_pair",
    "p_potential",
    "mabuchi",
    "fs_projection_gap",
    "hilb_projection_gap",
    "l_derivative_residual",
    "z_derivative_residual",
    "FunctionalReport",
    "functional_report",
]


def aubin_energy(m: FiberMetric, m_ref: FiberMetric) -> float:
    """I(m) - I(m_ref): the primitive of phi_dot integrated against dmu.

    Along the weight path e^(t phi) m_ref the derivative of the energy is
    affine in t (the volume density interpolates affinely on a curve), so the
    two-point average of the endpoint measures integrates it exactly.
    """
    if m.grid is not m_ref.grid:
        raise ValidationError("metrics must live on one grid")
    phi = potential_between(m, m_ref)
    avg = 0.5 * (m.density() + m_ref.density())
    return integrate(m.grid, phi * avg)


# spec-facing alias
i_functional = aubin_energy


def l_functional(m: FiberMetric, grid: QuadratureGrid = None) -> float:
    """log det of the averaged inner product; shifts by alpha*d under e^alpha."""
    return log_det(hilb(m, grid or m.grid))


def z_functional(H: GramMetric, m_ref: FiberMetric, grid: QuadratureGrid = None) -> float:
    """Minus the energy of the pullback metric of H, relative to m_ref.

    The reference dependence is one additive constant shared by every H in a
    session.
    """
    grid = grid or m_ref.grid
    return -aubin_energy(fs_metric(H, grid), m_ref)


def tilde_pair(m: FiberMetric, H: GramMetric, m_ref: FiberMetric):
    """Scale-invariant pair (L_tilde(m), Z_tilde(H)) against one reference."""
    grid = m_ref.grid
    d = grid.section_dim
    V = grid.V
    l_tilde = l_functional(m) - (d / V) * aubin_energy(m, m_ref)
    z_tilde = z_functional(H, m_ref) + (V / d) * log_det(H)
    return l_tilde, z_tilde


def p_potential(m: FiberMetric, H: GramMetric, m_ref: FiberMetric = None):
    """(P, P_tilde) for the pair (m, H).

    P = log trace of hilb(m) against H = log sum of hilb(m)-squared-norms of
    an H-orthonormal basis; P(m, hilb(m)) = log d exactly as computed.
    P_tilde subtracts the scale: it needs the session reference for its
    energy term (omitted when m_ref is None).
    """
    grid = m.grid
    d = grid.section_dim
    g = hilb(m)
    tr = np.trace(np.linalg.solve(H.matrix, g.matrix)).real
    if tr <= 0:
        raise NumericalError("trace pairing lost positivity")
    p = float(np.log(tr))
    p_tilde = p - np.log(d) + log_det(H) / d
    if m_ref is not None:
        p_tilde -= aubin_energy(m, m_ref) / grid.V
    return p, p_tilde


def fs_projection_gap(m: FiberMetric, H: GramMetric) -> float:
    """P_tilde(m, H) - P_tilde(pullback of H, H); nonnegative.

    The energy reference cancels in the difference, so none is needed.
    """
    grid = m.grid
    m_fs = fs_metric(H, grid)
    p_m, _ = p_potential(m, H)
    p_fs, _ = p_potential(m_fs, H)
    return (p_m - p_fs) - aubin_energy(m, m_fs) / grid.V


def hilb_projection_gap(m: FiberMetric, H: GramMetric) -> float:
    """P_tilde(m, H) - P_tilde(m, hilb(m)); nonnegative.

    Equals the trace/determinant gap of the pencil of H and hilb(m), an
    arithmetic-geometric mean inequality for its eigenvalues.
    """
    g = hilb(m)
    p_m, _ = p_potential(m, H)
    d = m.grid.section_dim
    return (p_m + log_det(H) / d) - (np.log(d) + log_det(g) / d)


def projection_gap_eigenform(m: FiberMetric, H: GramMetric) -> float:
    """hilb_projection_gap rewritten on the pencil spectrum (cross-check path)."""
    g = hilb(m)
    w, u = np.linalg.eigh(H.matrix)
    inv_root = (u / np.sqrt(w)) @ u.conj().T
    q = hermitize(inv_root @ g.matrix @ inv_root)
    eigs = np.linalg.eigvalsh(q)
    d = len(eigs)
    return float(np.log(np.mean(eigs)) - np.mean(np.log(eigs)))


# ----------------------------------------------------------------------------
# Mabuchi energy


def _simpson_weights(panels: int) -> np.ndarray:
    if panels < 2 or panels % 2:
        raise ValidationError("Simpson rule needs an even panel count >= 2")
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * panels)


def _mabuchi_simpson(m: FiberMetric, m_ref: FiberMetric, panels: int) -> float:
    grid = m.grid
    phi = potential_between(m, m_ref)
    s_hat = 4.0 * np.pi * grid.spec.euler_characteristic / grid.V
    w = _simpson_weights(panels)
    total = 0.0
    for i, wi in enumerate(w):
        t = i / panels
        mt = blend_metrics(m_ref, m, t)
        s_t, _ = scalar_curvature(mt)
        total += wi * integrate(grid, (s_t - s_hat) * phi * mt.density())
    return total


def mabuchi(m: FiberMetric, m_ref: FiberMetric, steps: int = 32) -> float:
    """K-energy difference, integrated along the weight path from m_ref to m.

    Simpson rule with `steps` panels plus a half-resolution Richardson check;
    raises NumericalError if the refinement ratio signals non-convergence.
    """
    if steps < 8:
        raise ValidationError("steps must be >= 8")
    steps = steps + (steps % 2)
    fine = _mabuchi_simpson(m, m_ref, steps)
    coarse = _mabuchi_simpson(m, m_ref, max(steps // 2, 4))
    err_est = abs(fine - coarse) / 15.0
    scale = max(abs(fine), 1e-12)
    if err_est > 1e-4 * scale + 1e-10:
        raise NumericalError(
            f"path integral did not converge: estimate {fine}, "
            f"refinement error {err_est:.3e}"
        )
    return fine


def mabuchi_variation(m: FiberMetric, phi_dot: np.ndarray) -> float:
    """The defining first variation: integral of (S - S_hat) phi_dot dmu."""
    s, s_hat = scalar_curvature(m)
    return integrate(m.grid, (s - s_hat) * phi_dot * m.density())


# ----------------------------------------------------------------------------
# derivative formulas and their finite-difference residuals


@dataclass(frozen=True)
class MetricDirection:
    """A smooth curve of algebraic metrics through t = 0.

    H_t = H + t * dH (Hermitian direction), log-scale c_t = c + t * dc.  The
    induced potential velocity at t = 0 is dc + z H^-1 dH H^-1 z^+ / K.
    """

    H: GramMetric
    dH: np.ndarray
    dc: float = 0.0

    def metric_at(self, grid: QuadratureGrid, t: float) -> AlgebraicMetric:
        return AlgebraicMetric(
            grid, GramMetric(hermitize(self.H.matrix + t * self.dH)), t * self.dc
        )

    def phi_dot(self, grid: QuadratureGrid) -> np.ndarray:
        m0 = AlgebraicMetric(grid, self.H)
        hinv = np.linalg.inv(self.H.matrix)
        a = hermitize(hinv @ self.dH @ hinv)
        Z = grid.sections[0]
        num = np.einsum("ni,ij,nj->n", Z, a, Z.conj()).real
        return self.dc + num / m0.kernel_jet()[(0, 0)].real


def _richardson_fd(f, step: float):
    d1 = (f(step) - f(-step)) / (2 * step)
    d2 = (f(step / 2) - f(-step / 2)) / step
    return (4 * d2 - d1) / 3


def l_derivative_formula(m: AlgebraicMetric, phi_dot: np.ndarray) -> float:
    """Closed form of dL/dt: integral of (D' rho + rho) phi_dot dmu."""
    rho_jet = density_rho_jet(m)
    rho = rho_jet[(0, 0)].real
    lap_rho = -(2.0 / m.density()) * rho_jet[(1, 1)].real
    return integrate(m.grid, (lap_rho + rho) * phi_dot * m.density())


def l_derivative_residual(
    grid: QuadratureGrid, direction: MetricDirection, step: float = 1e-4
) -> float:
    """|finite difference of L - closed form| / scale at t = 0.

    Central differences with one Richardson level; the formula must match to
    1e-5 relative.
    """
    m0 = direction.metric_at(grid, 0.0)
    fd = _richardson_fd(lambda e: l_functional(direction.metric_at(grid, e)), step)
    formula = l_derivative_formula(m0, direction.phi_dot(grid))
    scale = max(1.0, abs(fd))
    return abs(fd - formula) / scale


def z_derivative_formula(H: GramMetric, dH: np.ndarray, grid: QuadratureGrid) -> float:
    """Closed form of dZ/dt along H_t = H + t dH.

    Equals minus the pairing of the direction with the averaged inner product
    of the pullback metric:  -(V/d) tr(H^-1 dH H^-1 hilb(fs(H))).  The sign is
    pinned by the finite-difference oracle (the identity direction must give
    -V, matching the scaling laws).
    """
    m = fs_metric(H, grid)
    g = hilb(m)
    hinv = np.linalg.inv(H.matrix)
    val = np.trace(hinv @ dH @ hinv @ g.matrix).real
    return -(grid.V / grid.section_dim) * float(val)


def z_derivative_residual(
    H: GramMetric,
    dH: np.ndarray,
    m_ref: FiberMetric,
    step: float = 1e-4,
):
    """Residuals of both sign candidates for the derivative formula.

    Returns (residual_adopted, residual_printed_sign); the adopted form is
    the one the finite differences confirm.
    """
    grid = m_ref.grid

    def z_at(e):
        return z_functional(
            GramMetric(hermitize(H.matrix + e * dH)), m_ref, grid
        )

    fd = _richardson_fd(z_at, step)
    formula = z_derivative_formula(H, dH, grid)
    scale = max(1.0, abs(fd))
    return abs(fd - formula) / scale, abs(fd + formula) / scale


# ----------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class FunctionalReport:
    """Every ladder value for one pair (h, H) against a declared reference."""

    I_rel: float
    L: float
    Z: float
    L_tilde: float
    Z_tilde: float
    P: float
    P_tilde: float
    mabuchi_rel: float
    reference: str

    def to_dict(self) -> dict:
        return asdict(self)

    def __post_init__(self):
        for name, val in asdict(self).items():
            if name != "reference" and not np.isfinite(val):
                raise NumericalError(f"non-finite report entry {name}={val}")


def functional_report(
    m: FiberMetric,
    H: GramMetric,
    m_ref: FiberMetric,
    reference_id: str = "reference",
    mabuchi_steps: int = 32,
) -> FunctionalReport:
    """Evaluate the whole ladder for (m, H) against the reference metric."""
    grid = m.grid
    d, V = grid.section_dim, grid.V
    i_rel = aubin_energy(m, m_ref)
    l_val = l_functional(m)
    z_val = z_functional(H, m_ref)
    p, p_tilde = p_potential(m, H, m_ref)
    return FunctionalReport(
        I_rel=i_rel,
        L=l_val,
        Z=z_val,
        L_tilde=l_val - (d / V) * i_rel,
        Z_tilde=z_val + (V / d) * log_det(H),
        P=p,
        P_tilde=p_tilde,
        mabuchi_rel=mabuchi(m, m_ref, steps=mabuchi_steps),
        reference=reference_id,
    )
