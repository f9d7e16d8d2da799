"""The two constructions joining metrics on sections and metrics on the line.

``hilb`` averages a fiber metric into an inner product on the section space;
``fs_metric`` (in :mod:`balmet.metrics`) pulls an inner product back to a
fiber metric.  Fixed points of the round trip are the balanced pairs, where
the section density is constant; ``t_operator`` is one round trip on the
matrix side and ``balanced_residual`` measures the distance from balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jets import Jet, kernel_jet
from ._reduction import chunked_map_sum
from .errors import DomainError
from .hermitian import GramMetric, hermitize
from .metrics import AlgebraicMetric, FiberMetric, fs_metric
from .variety import QuadratureGrid

__all__ = [
    "hilb",
    "density_rho",
    "density_rho_jet",
    "t_operator",
    "BalancedResidual",
    "balanced_residual",
]


def hilb(m: FiberMetric, grid: QuadratureGrid = None) -> GramMetric:
    """Inner product (d/V) * integral of (z_a, z_b) against the volume form.

    Scale-equivariant: feeding e^alpha m returns e^alpha hilb(m).  Raises if
    the grid failed its construction self-test.
    """
    grid = grid or m.grid
    if grid is not m.grid:
        raise DomainError("metric and grid do not match")
    grid.require_healthy()
    d = grid.section_dim
    Z = grid.sections[0]
    density = np.ascontiguousarray(m.weight() * m.density() * grid.weights)

    def part(s, e):
        return np.einsum("na,nb,n->ab", Z[s:e].conj(), Z[s:e], density[s:e])

    g = chunked_map_sum(part, grid.total_nodes)
    return GramMetric(hermitize((d / grid.V) * g))


def density_rho_jet(m: FiberMetric, gram: GramMetric = None, order: int = 1) -> Jet:
    """Jet of the section density rho = (d/V) sum |s_a|^2 for a hilb(m)-
    orthonormal basis (s_a); basis independent.

    Closed form: (d/V) * K_Q(x) * weight(x) with Q = hilb(m)^-1, so the jet is
    exact given the grid's section derivatives.
    """
    grid = m.grid
    g = gram if gram is not None else hilb(m)
    q = hermitize(np.linalg.inv(g.matrix))
    kq = kernel_jet(grid.sections, q, order)
    w_jet = m.log_weight_jet(order).exp()
    return kq * w_jet * (grid.section_dim / grid.V)


def density_rho(m: FiberMetric, grid: QuadratureGrid = None) -> np.ndarray:
    """Node values of the section density; integrates to d against dmu."""
    if grid is not None and grid is not m.grid:
        raise DomainError("metric and grid do not match")
    return density_rho_jet(m)[(0, 0)].real


def density_rho_basis(m: FiberMetric) -> np.ndarray:
    """Same density built through an explicit Cholesky orthonormal basis.

    Exists as an independent code path for cross-checking the kernel form.
    """
    grid = m.grid
    g = hilb(m)
    L = np.linalg.cholesky(g.matrix)
    C = np.linalg.inv(L).conj().T  # columns: hilb-orthonormal coefficients
    S = grid.sections[0] @ C
    return (
        (grid.section_dim / grid.V)
        * np.einsum("na,na->n", S, S.conj()).real
        * m.weight()
    )


def t_operator(H: GramMetric, grid: QuadratureGrid) -> GramMetric:
    """One round trip on the matrix side: hilb of the pulled-back metric.

    Scale-equivariant; its fixed points (mod scale) are the balanced inner
    products.
    """
    return hilb(fs_metric(H, grid), grid)


@dataclass(frozen=True)
class BalancedResidual:
    """How far a pair (fs_metric(H), H) is from balance.

    rho_flatness: sup-norm of the section density against its constant target
    d/V, relatively.  map_distance: spectral distance between H and its round
    trip after trace-normalizing both; invariant under constant rescaling.
    """

    rho_flatness: float
    map_distance: float

    def below(self, tol_rho: float, tol_map: float) -> bool:
        return self.rho_flatness < tol_rho and self.map_distance < tol_map


def _trace_normalize(mat: np.ndarray) -> np.ndarray:
    d = mat.shape[0]
    return mat * (d / np.trace(mat).real)


def balanced_residual(
    H: GramMetric,
    grid: QuadratureGrid,
    t_H: GramMetric = None,
    m: AlgebraicMetric = None,
) -> BalancedResidual:
    """Both residual components for the pair (fs_metric(H), H).

    Accepts precomputed pieces to avoid recomputing them inside iteration
    loops.
    """
    m = m if m is not None else fs_metric(H, grid)
    tH = t_H if t_H is not None else t_operator(H, grid)
    rho = density_rho_jet(m, gram=tH, order=0)[(0, 0)].real
    target = grid.section_dim / grid.V
    flatness = float(np.max(np.abs(rho - target)) / target)

    a = _trace_normalize(H.matrix)
    b = _trace_normalize(tH.matrix)
    w, u = np.linalg.eigh(a)
    inv_root = (u / np.sqrt(w)) @ u.conj().T
    pencil = hermitize(inv_root @ b @ inv_root)
    eigs = np.linalg.eigvalsh(pencil)
    if np.min(eigs) <= 0:
        raise DomainError("round trip lost positivity; quadrature unusable")
    distance = float(np.max(np.abs(np.log(eigs))))
    return BalancedResidual(rho_flatness=flatness, map_distance=distance)
