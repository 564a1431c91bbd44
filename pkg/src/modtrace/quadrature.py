"""Vectorized Gauss-Legendre quadrature: fixed composite panels and adaptive
bisection. Integrands take a numpy array of nodes and return an array
(real or complex) of the same shape."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from modtrace.errors import PrecisionError

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def legendre_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def panel_edges(a: float, b: float, panels: int) -> np.ndarray:
    return np.linspace(a, b, panels + 1)


def composite(f: Integrand, edges, order: int = 16):
    """Sum of Gauss-Legendre rules over consecutive panels [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    x, w = legendre_rule(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return np.sum(vals * (half[:, None] * w[None, :]))


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    evaluations: int


def adaptive(f: Integrand, a: float, b: float, tol: float = 1e-12, order: int = 12,
             max_intervals: int = 20000, breakpoints=()) -> QuadResult:
    """Adaptive bisection; each panel is accepted once one rule on the whole
    panel agrees with the same rule on its two halves to within the panel's
    share of ``tol`` (absolute)."""
    x, w = legendre_rule(order)
    pts = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    stack = list(zip(pts[:-1], pts[1:]))
    total = 0.0
    error = 0.0
    evaluations = 0
    width = b - a

    def rule(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return half * np.dot(w, f(mid + half * x))

    coarse = {iv: rule(*iv) for iv in stack}
    evaluations += order * len(stack)
    while stack:
        if len(stack) + evaluations // order > max_intervals:
            raise PrecisionError(f"adaptive quadrature exceeded {max_intervals} panels")
        lo, hi = stack.pop()
        c = (lo + hi) / 2
        left, right = rule(lo, c), rule(c, hi)
        evaluations += 2 * order
        fine = left + right
        diff = abs(fine - coarse.pop((lo, hi)))
        share = tol * (hi - lo) / width
        if diff <= max(share, 1e-15 * abs(fine)) or hi - lo < 1e-13 * width:
            total += fine
            error += diff
        else:
            coarse[(lo, c)] = left
            coarse[(c, hi)] = right
            stack.append((lo, c))
            stack.append((c, hi))
    return QuadResult(total, error, evaluations)
