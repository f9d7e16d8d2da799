"""Nodewise mixed-derivative tables for functions of a chart coordinate.

A :class:`Jet` stores the arrays ``f^(a,b) = d^a/dt^a d^b/dtbar^b f`` evaluated
on a fixed set of nodes, for ``a <= order_t`` and ``b <= order_tbar``.  All the
curvature and density formulas in this package are built from closed-form jets
of section kernels, so no finite-difference stencils appear anywhere in the
evaluation pipeline.
"""

from __future__ import annotations

from math import comb

import numpy as np

__all__ = ["Jet", "kernel_jet", "PolyTT", "RationalTT", "one_plus_tt_jet"]


class Jet:
    """Mixed (t, tbar)-derivative table of a nodewise function.

    comp[(a, b)] holds d_t^a d_tbar^b f at every node as a complex array.
    Arithmetic follows the Leibniz rule and truncates to the smaller order of
    the operands.
    """

    __slots__ = ("comp", "order_t", "order_tbar")

    def __init__(self, comp: dict, order_t: int, order_tbar: int):
        self.comp = comp
        self.order_t = order_t
        self.order_tbar = order_tbar

    @classmethod
    def constant(cls, value, like: "Jet", order_t=None, order_tbar=None) -> "Jet":
        ot = like.order_t if order_t is None else order_t
        ob = like.order_tbar if order_tbar is None else order_tbar
        zero = np.zeros_like(like.comp[(0, 0)])
        comp = {(a, b): zero for a in range(ot + 1) for b in range(ob + 1)}
        comp[(0, 0)] = zero + value
        return cls(comp, ot, ob)

    def __getitem__(self, key):
        return self.comp[key]

    @property
    def values(self):
        return self.comp[(0, 0)]

    def real_values(self):
        return self.comp[(0, 0)].real

    def _orders_with(self, other):
        return min(self.order_t, other.order_t), min(self.order_tbar, other.order_tbar)

    def __add__(self, other):
        if not isinstance(other, Jet):
            comp = dict(self.comp)
            comp[(0, 0)] = comp[(0, 0)] + other
            return Jet(comp, self.order_t, self.order_tbar)
        ot, ob = self._orders_with(other)
        comp = {
            (a, b): self.comp[(a, b)] + other.comp[(a, b)]
            for a in range(ot + 1)
            for b in range(ob + 1)
        }
        return Jet(comp, ot, ob)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, Jet) else -other)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            comp = {k: v * other for k, v in self.comp.items()}
            return Jet(comp, self.order_t, self.order_tbar)
        ot, ob = self._orders_with(other)
        comp = {}
        for a in range(ot + 1):
            for b in range(ob + 1):
                acc = 0.0
                for i in range(a + 1):
                    for j in range(b + 1):
                        acc = acc + (
                            comb(a, i)
                            * comb(b, j)
                            * self.comp[(i, j)]
                            * other.comp[(a - i, b - j)]
                        )
                comp[(a, b)] = acc
        return Jet(comp, ot, ob)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        ot, ob = self.order_t, self.order_tbar
        f00 = self.comp[(0, 0)]
        inv = 1.0 / f00
        comp = {(0, 0): inv}
        for total in range(1, ot + ob + 1):
            for a in range(min(total, ot) + 1):
                b = total - a
                if b > ob:
                    continue
                acc = 0.0
                for i in range(a + 1):
                    for j in range(b + 1):
                        if i == 0 and j == 0:
                            continue
                        acc = acc + (
                            comb(a, i)
                            * comb(b, j)
                            * self.comp[(i, j)]
                            * comp[(a - i, b - j)]
                        )
                comp[(a, b)] = -inv * acc
        return Jet(comp, ot, ob)

    def _dt(self) -> "Jet":
        # table of d/dt f, valid one order lower in t
        comp = {
            (a, b): self.comp[(a + 1, b)]
            for a in range(self.order_t)
            for b in range(self.order_tbar + 1)
        }
        return Jet(comp, self.order_t - 1, self.order_tbar)

    def _dtbar(self) -> "Jet":
        comp = {
            (a, b): self.comp[(a, b + 1)]
            for a in range(self.order_t + 1)
            for b in range(self.order_tbar)
        }
        return Jet(comp, self.order_t, self.order_tbar - 1)

    def log(self) -> "Jet":
        """Jet of log f; f must be nonvanishing at every node."""
        ot, ob = self.order_t, self.order_tbar
        rec = self.reciprocal()
        comp = {(0, 0): np.log(self.comp[(0, 0)])}
        if ot >= 1:
            dlog = self._dt() * rec
            for a in range(1, ot + 1):
                for b in range(ob + 1):
                    comp[(a, b)] = dlog.comp[(a - 1, b)]
        if ob >= 1:
            dblog = self._dtbar() * rec
            for b in range(1, ob + 1):
                comp[(0, b)] = dblog.comp[(0, b - 1)]
        return Jet(comp, ot, ob)

    def exp(self) -> "Jet":
        """Jet of exp f, built in increasing total derivative order."""
        ot, ob = self.order_t, self.order_tbar
        comp = {(0, 0): np.exp(self.comp[(0, 0)])}
        for total in range(1, ot + ob + 1):
            for a in range(min(total, ot) + 1):
                b = total - a
                if b > ob:
                    continue
                # d_t (a>=1) or d_tbar chain rule, Leibniz over lower components
                acc = 0.0
                if a >= 1:
                    for i in range(a):
                        for j in range(b + 1):
                            acc = acc + (
                                comb(a - 1, i)
                                * comb(b, j)
                                * comp[(i, j)]
                                * self.comp[(a - i, b - j)]
                            )
                else:
                    for j in range(b):
                        acc = acc + comb(b - 1, j) * comp[(0, j)] * self.comp[(0, b - j)]
                comp[(a, b)] = acc
        return Jet(comp, ot, ob)

    def shift(self, da: int, db: int) -> "Jet":
        """Jet of d_t^da d_tbar^db f (reduces available orders)."""
        ot = self.order_t - da
        ob = self.order_tbar - db
        comp = {
            (a, b): self.comp[(a + da, b + db)]
            for a in range(ot + 1)
            for b in range(ob + 1)
        }
        return Jet(comp, ot, ob)


def kernel_jet(sections, M, order: int = None) -> Jet:
    """Jet of K(x) = z(x) M z(x)^dagger from stacked section derivatives.

    Parameters
    ----------
    sections : sequence of arrays, sections[a] of shape (n, d)
        a-th holomorphic derivative of the basis sections at the nodes.
    M : (d, d) complex Hermitian matrix.
    order : truncation order (defaults to all supplied derivatives).
    """
    if order is None:
        order = len(sections) - 1
    order = min(order, len(sections) - 1)
    projected = [sections[a] @ M for a in range(order + 1)]
    comp = {}
    for a in range(order + 1):
        for b in range(order + 1):
            comp[(a, b)] = np.einsum(
                "nd,nd->n", projected[a], sections[b].conj()
            )
    return Jet(comp, order, order)


def one_plus_tt_jet(t: np.ndarray, order: int = 2) -> Jet:
    """Jet of 1 + t*tbar."""
    tb = np.conj(t)
    zero = np.zeros_like(t)
    comp = {
        (a, b): zero.copy() for a in range(order + 1) for b in range(order + 1)
    }
    comp[(0, 0)] = 1.0 + t * tb
    if order >= 1:
        comp[(1, 0)] = tb.copy()
        comp[(0, 1)] = t.copy()
        comp[(1, 1)] = np.ones_like(t)
    return Jet(comp, order, order)


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


class PolyTT:
    """Polynomial in (t, tbar) given by a coefficient map {(a, b): c_ab}.

    Real-valued iff the coefficients satisfy c_ba = conj(c_ab).
    """

    def __init__(self, coeffs: dict):
        self.coeffs = {k: complex(v) for k, v in coeffs.items()}

    def is_hermitian(self, tol=1e-12) -> bool:
        for (a, b), c in self.coeffs.items():
            if abs(self.coeffs.get((b, a), 0.0) - np.conj(c)) > tol:
                return False
        return True

    def jet(self, t: np.ndarray, order: int = 2) -> Jet:
        tb = np.conj(t)
        comp = {}
        for i in range(order + 1):
            for j in range(order + 1):
                acc = np.zeros_like(t)
                for (a, b), c in self.coeffs.items():
                    if a < i or b < j:
                        continue
                    acc = acc + (
                        c * _falling(a, i) * _falling(b, j) * t ** (a - i) * tb ** (b - j)
                    )
                comp[(i, j)] = acc
        return Jet(comp, order, order)


class RationalTT:
    """num(t, tbar) / (1 + t*tbar)^power — smooth functions on the sphere.

    With a Hermitian numerator of bidegree <= (power, power) this is a real
    rational function extending smoothly through t = infinity.
    """

    def __init__(self, num: PolyTT, power: int):
        self.num = num
        self.power = int(power)

    def jet(self, t: np.ndarray, order: int = 2) -> Jet:
        nj = self.num.jet(t, order)
        tj = one_plus_tt_jet(t, order)
        den = tj
        for _ in range(self.power - 1):
            den = den * tj
        if self.power == 0:
            return nj
        return nj * den.reciprocal()
