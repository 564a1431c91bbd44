"""Special functions in double precision.

Everything here targets an absolute error of about 1e-12 on the ranges used by
the trace and series code. Arbitrary precision lives in :mod:`modtrace.arbcalc`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special as sp

from modtrace.errors import DomainError

EULER_GAMMA = 0.57721566490153286061
SQRT_PI = math.sqrt(math.pi)

# crossover between the power series and the large-argument expansions
_SERIES_CUTOFF_E1 = 6.0
_SERIES_CUTOFF_EI = 40.0

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def _e1_series(x: float) -> float:
    total, term, k = 0.0, 1.0, 1
    while True:
        term *= -x / k
        contrib = -term / k
        total += contrib
        if abs(contrib) < 1e-17 * max(1.0, abs(total)):
            break
        k += 1
    return -EULER_GAMMA - math.log(x) + total


def _e1_continued_fraction(x: float) -> float:
    # modified Lentz on the classical fraction e^{-x}/(x+1- 1/(x+3- 4/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-x)
    raise ArithmeticError("E1 continued fraction did not converge")


def _ei_series(x: float) -> float:
    total, term, k = 0.0, 1.0, 1
    while True:
        term *= x / k
        contrib = term / k
        total += contrib
        if contrib < 1e-17 * total:
            break
        k += 1
    return EULER_GAMMA + math.log(x) + total


def _ei_asymptotic(x: float) -> float:
    # stop at the smallest term; for x >= 40 that term is below 1e-16
    total, term, k = 1.0, 1.0, 1
    while True:
        nxt = term * k / x
        if nxt >= term:
            break
        term = nxt
        total += term
        if term < 1e-17:
            break
        k += 1
    return math.exp(x) / x * total


def e1(x: float) -> float:
    """Exponential integral E_1(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"E1 needs x > 0, got {x}")
    if x <= _SERIES_CUTOFF_E1:
        return _e1_series(x)
    return _e1_continued_fraction(x)


def ei(x: float) -> float:
    """Principal value Ei(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"Ei needs x > 0 here, got {x}")
    if x <= _SERIES_CUTOFF_EI:
        return _ei_series(x)
    return _ei_asymptotic(x)


def exp_integral_EI(w: float) -> float:
    """EI(w) = int_w^oo e^{-t} dt/t, a principal value when w < 0.

    Equals E_1(w) for w > 0 and -Ei(-w) for w < 0.
    """
    w = float(w)
    if w == 0.0 or not math.isfinite(w):
        raise DomainError("EI has a logarithmic singularity at 0")
    if w > 0:
        return e1(w)
    return -ei(-w)


def _digamma_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    shift = np.maximum(0, np.ceil(10.0 - z.real)).astype(int)
    w = z.copy()
    for k in range(int(shift.max(initial=0))):
        active = shift > k
        acc[active] -= 1.0 / w[active]
        w[active] += 1.0
    inv2 = 1.0 / (w * w)
    series = np.zeros_like(w)
    power = inv2.copy()
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * power
        power = power * inv2
    return acc + np.log(w) - 0.5 / w - series


def digamma(z):
    """psi(z) = Gamma'(z)/Gamma(z) for complex z off the poles 0, -1, -2, ...

    Upward recurrence to Re z >= 10, then the Stirling expansion. Accepts
    scalars or numpy arrays.
    """
    arr = np.asarray(z, dtype=complex)
    near = (np.abs(arr.imag) < 1e-3) & (arr.real <= 0.5) & (np.abs(arr.real - np.round(arr.real)) < 1e-3)
    if np.any(near):
        raise DomainError("digamma evaluated at (or within 1e-3 of) a pole")
    out = _digamma_array(np.atleast_1d(arr))
    if np.ndim(z) == 0:
        value = complex(out[0])
        return value.real if isinstance(z, (int, float)) else value
    return out


def beta_incomplete(k: Fraction | float, s: float) -> float:
    """beta_k(s) = int_1^oo e^{-st} t^{-k} dt for k in {1/2, 3/2}."""
    if not s > 0:
        raise DomainError(f"beta_k(s) needs s > 0, got {s}")
    root = math.sqrt(s)
    if k == Fraction(1, 2) or k == 0.5:
        return SQRT_PI / root * math.exp(-s) * float(sp.erfcx(root))
    if k == Fraction(3, 2) or k == 1.5:
        return math.exp(-s) * (2.0 - 2.0 * SQRT_PI * root * float(sp.erfcx(root)))
    raise DomainError(f"beta_k implemented for k = 1/2, 3/2 only, got {k}")


def beta_complementary_half(s: float) -> float:
    """beta^c_{1/2}(s) = int_0^1 e^{-st} t^{-1/2} dt = 2 int_0^1 e^{-s w^2} dw."""
    s = float(s)
    if not math.isfinite(s):
        raise DomainError("non-finite argument")
    if s == 0.0:
        return 2.0
    root = math.sqrt(abs(s))
    if s > 0:
        return SQRT_PI / root * math.erf(root)
    # 2 int_0^1 e^{|s| w^2} dw written through Dawson's integral
    return 2.0 * math.exp(abs(s)) * float(sp.dawsn(root)) / root


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _erfcx_integral(t: float) -> float:
    """int_0^t e^{w^2} erfc(w) dw on dyadic Gauss-Legendre panels."""
    x, wts = _legendre(24)
    edges = [0.0]
    edge = min(t, 1.0)
    while True:
        edges.append(edge)
        if edge >= t:
            break
        edge = min(2.0 * edge, t)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.dot(wts, sp.erfcx(mid + half * x)))
    return total


_CALF_CONSTANT = 0.5 * math.log(2.0) + 0.25 * EULER_GAMMA


def calF(t: float) -> float:
    """F(t) = log t - sqrt(pi) int_0^t e^{w^2} erfc(w) dw + log(2)/2 + gamma/4."""
    if not t > 0:
        raise DomainError(f"calF needs t > 0, got {t}")
    return math.log(t) - SQRT_PI * _erfcx_integral(t) + _CALF_CONSTANT


def calF_prime(t: float) -> float:
    """d F/dt = 1/t - sqrt(pi) e^{t^2} erfc(t)."""
    if not t > 0:
        raise DomainError(f"calF needs t > 0, got {t}")
    return 1.0 / t - SQRT_PI * float(sp.erfcx(t))


def erfc(x: float) -> float:
    return math.erfc(x)


def sigma1(n: int) -> Fraction:
    """Divisor sum sigma_1(n), with the convention sigma_1(0) = -1/24."""
    n = int(n)
    if n < 0:
        raise DomainError("sigma1 needs n >= 0")
    if n == 0:
        return Fraction(-1, 24)
    total, d = 0, 1
    while d * d <= n:
        if n % d == 0:
            total += d
            if d * d != n:
                total += n // d
        d += 1
    return Fraction(total)
