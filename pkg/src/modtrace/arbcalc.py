"""Ball-arithmetic evaluation for integrals with heavy cancellation.

Square-index traces at small split heights integrate functions of size
e^{2 pi m / c}; the final value is of order one, so double precision cannot
reach the required accuracy. The helpers here run the same formulas in arb
with a working precision chosen from the expected magnitude.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction
from functools import lru_cache

from flint import acb, acb_poly, arb, ctx

from modtrace.errors import DomainError
from modtrace.qseries import ModularFunctionInput, tail_bound
from modtrace.quadforms import reduce_point_group

I = acb(0, 1)


def digits_for(magnitude: float, target: float = 1e-12) -> int:
    """Decimal digits needed to resolve ``target`` against terms of size ``magnitude``."""
    return int(math.ceil(math.log10(max(magnitude, 1.0)) - math.log10(target))) + 8


@contextmanager
def working_digits(dps: int):
    old = ctx.prec
    ctx.prec = max(64, int(dps * 3.33) + 16)
    try:
        yield
    finally:
        ctx.prec = old


def exact(x) -> arb:
    if isinstance(x, Fraction):
        return arb(x.numerator) / x.denominator
    if isinstance(x, int):
        return arb(x)
    return arb(x)


@lru_cache(maxsize=64)
def _legendre(order: int, prec: int) -> tuple[tuple[arb, arb], ...]:
    old = ctx.prec
    ctx.prec = prec
    try:
        return tuple(arb.legendre_p_root(order, k, weight=True) for k in range(order))
    finally:
        ctx.prec = old


def legendre(order: int) -> tuple[tuple[arb, arb], ...]:
    """Gauss-Legendre nodes and weights on [-1, 1] at the current precision."""
    return _legendre(order, ctx.prec)


def e1(x) -> arb:
    # arb's expint(1) drops ~100 bits of relative accuracy for large x; -Ei(-x) does not
    return -(-exact(x)).ei()


def exp_integral_EI(w) -> arb:
    w = exact(w)
    if w == 0:
        raise DomainError("EI has a logarithmic singularity at 0")
    if w > 0:
        return e1(w)
    return -(-w).ei()


class Evaluator:
    """Evaluates a modular input at acb points: float reduction picks the
    group element, the image point and the q-series are computed in arb."""

    def __init__(self, f: ModularFunctionInput, tol: float = 1e-30):
        self.f = f
        self.tol = tol
        self._poly = acb_poly([acb(exact(c)) for c in f.aplus.coeffs])
        self._nmin = f.aplus.n_min
        self._minus = [(n, exact(a)) for n, a in f.aminus]

    def _series(self, z0: acb) -> acb:
        q = (2 * arb.pi() * I * z0).exp()
        val = self._poly(q)
        if self._nmin:
            val = val * q ** self._nmin
        for n, a in self._minus:
            val += a * (2 * arb.pi() * I * n * z0.conjugate()).exp()
        return val

    def __call__(self, z: acb) -> acb:
        zf = complex(z)
        _, g = reduce_point_group(zf, self.f.group)
        z0 = (g.a * z + g.b) / (g.c * z + g.d)
        val = self._series(z0)
        bound = tail_bound(self.f, math.exp(-2 * math.pi * float(z0.imag)))
        if bound > 0:
            val += acb(arb(0, bound), arb(0, bound))
        return val

    def minus_part(self, z: acb) -> acb:
        """f^-(z) = sum a^-(n) e(n conj z), evaluated directly (no reduction)."""
        total = acb(0)
        for n, a in self._minus:
            total += a * (2 * arb.pi() * I * n * z.conjugate()).exp()
        return total

    def plus_part(self, z: acb) -> acb:
        return self(z) - self.minus_part(z) if self._minus else self(z)


def gauss_edges(func, edges: list, order: int) -> acb:
    """Gauss-Legendre over consecutive panels [edges[i], edges[i+1]] (acb endpoints)."""
    rule = legendre(order)
    total = acb(0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        acc = acb(0)
        for x, w in rule:
            acc += w * func(mid + half * x)
        total += acc * half
    return total


def to_complex(x: acb) -> complex:
    return complex(x)


def radius(x: acb) -> float:
    return float(x.real.rad()) + float(x.imag.rad())
