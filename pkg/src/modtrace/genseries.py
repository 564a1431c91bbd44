"""The weight 1/2 generating series H(tau, f) as a finite list of Fourier terms.

Each term is coefficient * profile(m, v) * e(m tau). Weight 1/2 profiles:

    holo    1
    beta    2 sqrt(v) beta_{1/2}(4 pi |m| v)         (m < 0)
    betac   sqrt(v) beta^c_{1/2}(-4 pi m v)          (m > 0, square)
    sqrtv   sqrt(v)                                  (m = 0)
    calF    F(2 sqrt(pi v m))                        (m > 0, square)
    logv    log v                                    (m = 0)

and the weight 3/2 images under xi:

    holo     1
    beta32   v^{-1/2} beta_{3/2}(4 pi |m| v)         (m < 0)
    invsqrtv v^{-1/2}                                (m = 0)

Coefficients are stored in the discriminant ("intro") normalization. The
lattice normalization at level one is the same series doubled.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable

from modtrace.errors import DomainError
from modtrace.qseries import ModularFunctionInput
from modtrace.quadforms import is_square
from modtrace.specialfn import (EULER_GAMMA, beta_complementary_half, beta_incomplete, calF)
from modtrace.traces import LatticeContext, trace, trace_cm_exact_constant, trace_complementary, trace_zero

HALF = Fraction(1, 2)
THREE_HALVES = Fraction(3, 2)

PROFILES = {
    HALF: ("holo", "beta", "betac", "sqrtv", "calF", "logv"),
    THREE_HALVES: ("holo", "beta32", "invsqrtv"),
}

V_MIN = 0.3


def _check_profile(profile: str, m: Fraction, weight: Fraction) -> None:
    if weight not in PROFILES or profile not in PROFILES[weight]:
        raise DomainError(f"profile {profile!r} is not a weight {weight} profile")
    if profile in ("beta", "beta32") and not m < 0:
        raise DomainError(f"{profile} terms need a negative index, got {m}")
    if profile in ("betac", "calF"):
        if not m > 0 or m.denominator != 1 or not is_square(int(m)):
            raise DomainError(f"{profile} terms sit at positive square indices, got {m}")
    if profile in ("sqrtv", "logv", "invsqrtv") and m != 0:
        raise DomainError(f"{profile} terms sit at index 0, got {m}")


@dataclass(frozen=True)
class FourierTerm:
    index: Fraction
    coefficient: complex
    profile: str
    error: float = 0.0
    weight: Fraction = HALF
    exact: Fraction | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", Fraction(self.index))
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "error", float(self.error))
        _check_profile(self.profile, self.index, Fraction(self.weight))

    def shape(self, v: float) -> float:
        """The v-dependent profile factor (without the coefficient and e(m tau))."""
        m = float(self.index)
        p = self.profile
        if p == "holo":
            return 1.0
        if p == "beta":
            return 2.0 * math.sqrt(v) * beta_incomplete(HALF, 4 * math.pi * abs(m) * v)
        if p == "betac":
            return math.sqrt(v) * beta_complementary_half(-4 * math.pi * m * v)
        if p == "sqrtv":
            return math.sqrt(v)
        if p == "calF":
            return calF(2 * math.sqrt(math.pi * v * m))
        if p == "logv":
            return math.log(v)
        if p == "beta32":
            return beta_incomplete(THREE_HALVES, 4 * math.pi * abs(m) * v) / math.sqrt(v)
        if p == "invsqrtv":
            return 1.0 / math.sqrt(v)
        raise DomainError(p)

    def value(self, tau: complex) -> complex:
        v = tau.imag
        if not v > 0:
            raise DomainError("tau must lie in the upper half plane")
        return self.coefficient * self.shape(v) * cmath.exp(2j * math.pi * float(self.index) * tau)

    def scaled(self, c: complex) -> "FourierTerm":
        ex = self.exact * Fraction(c) if self.exact is not None and isinstance(c, (int, Fraction)) else None
        return replace(self, coefficient=self.coefficient * c, error=self.error * abs(c), exact=ex)

    def to_json(self) -> dict:
        out = {"index": str(self.index), "profile": self.profile, "weight": str(self.weight)}
        if self.exact is not None:
            out["coefficient"] = str(self.exact)
        else:
            out["coefficient"] = {"re": repr(self.coefficient.real), "im": repr(self.coefficient.imag)}
        out["error"] = repr(self.error)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "FourierTerm":
        c = doc["coefficient"]
        if isinstance(c, str):
            ex = Fraction(c)
            coef = complex(float(ex))
        else:
            ex, coef = None, complex(float(c["re"]), float(c["im"]))
        return cls(Fraction(doc["index"]), coef, doc["profile"], float(doc["error"]),
                   Fraction(doc["weight"]), ex)


def _merge(terms: Iterable[FourierTerm]) -> tuple[FourierTerm, ...]:
    acc: dict[tuple[Fraction, str], FourierTerm] = {}
    for t in terms:
        key = (t.index, t.profile)
        if key in acc:
            old = acc[key]
            ex = old.exact + t.exact if old.exact is not None and t.exact is not None else None
            acc[key] = replace(old, coefficient=old.coefficient + t.coefficient,
                               error=old.error + t.error, exact=ex)
        else:
            acc[key] = t
    order = {p: k for k, p in enumerate(PROFILES[HALF] + PROFILES[THREE_HALVES])}
    return tuple(sorted(acc.values(), key=lambda t: (t.index, order[t.profile])))


@dataclass(frozen=True)
class SeriesAssembly:
    terms: tuple[FourierTerm, ...]
    d_max: int
    descriptor: str
    ctx: LatticeContext = LatticeContext()
    weight: Fraction = HALF

    def __add__(self, other: "SeriesAssembly") -> "SeriesAssembly":
        if self.weight != other.weight:
            raise DomainError("cannot add series of different weights")
        return SeriesAssembly(_merge(self.terms + other.terms), max(self.d_max, other.d_max),
                              f"{self.descriptor}+{other.descriptor}", self.ctx, self.weight)

    def scaled(self, c) -> "SeriesAssembly":
        return replace(self, terms=tuple(t.scaled(c) for t in self.terms), descriptor=f"{c}*{self.descriptor}")

    def coefficient(self, index, profile: str = "holo") -> complex:
        index = Fraction(index)
        for t in self.terms:
            if t.index == index and t.profile == profile:
                return t.coefficient
        return 0j

    def term(self, index, profile: str = "holo") -> FourierTerm | None:
        index = Fraction(index)
        return next((t for t in self.terms if t.index == index and t.profile == profile), None)

    def profiles_at(self, index) -> set[str]:
        index = Fraction(index)
        return {t.profile for t in self.terms if t.index == index}

    def to_json(self) -> dict:
        return {
            "descriptor": self.descriptor,
            "d_max": self.d_max,
            "weight": str(self.weight),
            "convention": self.ctx.convention,
            "terms": [t.to_json() for t in self.terms],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SeriesAssembly":
        ctx = LatticeContext(convention=doc.get("convention", "intro"))
        return cls(tuple(FourierTerm.from_json(t) for t in doc["terms"]), int(doc["d_max"]),
                   doc["descriptor"], ctx, Fraction(doc["weight"]))


# ---------------------------------------------------------------- assembly

def _trace_terms(f: ModularFunctionInput, d: int, variant: str, tol: float) -> list[FourierTerm]:
    """Terms contributed by discriminant d != 0."""
    if d % 4 not in (0, 1):
        return []
    group = f.group
    out = []
    if d < 0:
        if f.order == 0 and f.is_holomorphic:
            ex = trace_cm_exact_constant(d, group) * Fraction(f.aplus[0])
            out.append(FourierTerm(d, float(ex), "beta", 0.0, HALF, ex))
        else:
            r = trace(f, d, group, tol=tol)
            out.append(FourierTerm(d, r.value, "beta", r.error))
        return out
    r = trace(f, d, group, variant=variant, tol=tol) if is_square(d) else trace(f, d, group, tol=tol)
    out.append(FourierTerm(d, r.value, "holo", r.error))
    if is_square(d):
        c = trace_complementary(f, d, group)
        if c != 0:
            out.append(FourierTerm(d, c, "betac", 0.0))
    return out


def _worker(args):
    return _trace_terms(*args)


def _workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    try:
        return max(1, int(os.environ.get("MT_THREADS", "1")))
    except ValueError:
        return 1


def constant_term_block(a0: Fraction, d_max: int) -> list[FourierTerm]:
    """Extra terms for a nonzero constant coefficient a0 at level one:
    -(a0/pi) F(2 sqrt(pi v d)) q^d at squares d = n^2, and the constant
    -(a0/4 pi)(log(16 pi v) - gamma)."""
    a0f = float(a0)
    out = [FourierTerm(0, -a0f / (4 * math.pi), "logv"),
           FourierTerm(0, -a0f * (math.log(16 * math.pi) - EULER_GAMMA) / (4 * math.pi), "holo")]
    n = 1
    while n * n <= d_max:
        out.append(FourierTerm(n * n, -a0f / math.pi, "calF"))
        n += 1
    return out


def assemble(f: ModularFunctionInput, ctx: LatticeContext = LatticeContext(), d_max: int = 16,
             variant: str = "ei", tol: float = 1e-10, workers: int | None = None) -> SeriesAssembly:
    """H(tau, f) through |d| <= d_max.

    Holomorphic terms tr_d(f) q^d for d > 0, beta terms for d < 0,
    -2 sqrt(v) tr_0(f) at d = 0, complementary terms at squares, and, when
    a(0) != 0, the F and log v block (level one only).
    """
    if d_max < 1:
        raise DomainError("d_max must be at least 1")
    if ctx.N != 1:
        raise DomainError("generating series are wired for the level one lattice")
    a0 = Fraction(f.aplus[0])
    if a0 and f.group.p != 1:
        raise DomainError("a nonzero constant coefficient is supported at level one only")
    jobs = [(f, d, variant, tol) for d in range(-d_max, d_max + 1) if d != 0]
    n_workers = _workers(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(_worker, jobs))
    else:
        chunks = [_worker(j) for j in jobs]
    terms = [t for chunk in chunks for t in chunk]
    t0 = trace_zero(f)
    terms.append(FourierTerm(0, float(-2 * t0), "sqrtv", 0.0, HALF, -2 * t0))
    if a0:
        terms += constant_term_block(a0, d_max)
    series = SeriesAssembly(_merge(terms), d_max, f"H({f.name}, {f.group.name})", ctx)
    if ctx.convention == "lattice":
        series = replace(series.scaled(ctx.scale), descriptor=series.descriptor + " [lattice]")
    return series


# -------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class SeriesValue:
    value: complex
    last_term: float  # size of the largest term among the top indices: a truncation heuristic


def evaluate_H(S: SeriesAssembly, tau: complex, v_min: float = V_MIN) -> SeriesValue:
    tau = complex(tau)
    if tau.imag < v_min:
        raise DomainError(f"series evaluation needs v >= {v_min}")
    total = 0j
    top = 0.0
    edge = max(abs(t.index) for t in S.terms) if S.terms else 0
    for t in S.terms:
        val = t.value(tau)
        total += val
        if abs(t.index) >= edge - 3:
            top = max(top, abs(val))
    return SeriesValue(total, top)


# ------------------------------------------------------------------ xi map

def xi_term(t: FourierTerm) -> FourierTerm | None:
    """Image of one weight 1/2 term under xi = 2 i v^{1/2} conj(d/d tau-bar)."""
    c = t.coefficient.conjugate()
    m = t.index
    p = t.profile
    if p == "holo":
        return None
    if p == "sqrtv":
        ex = t.exact / 2 if t.exact is not None else None
        return FourierTerm(0, c / 2, "holo", t.error / 2, THREE_HALVES, ex)
    if p == "logv":
        return FourierTerm(0, c, "invsqrtv", t.error, THREE_HALVES)
    if p == "beta":
        ex = -2 * t.exact if t.exact is not None else None
        return FourierTerm(-m, -2 * c, "holo", 2 * t.error, THREE_HALVES, ex)
    if p == "betac":
        return FourierTerm(-m, c, "holo", t.error, THREE_HALVES)
    if p == "calF":
        return FourierTerm(-m, c / 4, "beta32", t.error / 4, THREE_HALVES)
    raise DomainError(f"xi is defined on weight 1/2 terms, got {p}")


def xi_apply(S: SeriesAssembly) -> SeriesAssembly:
    if S.weight != HALF:
        raise DomainError("xi_apply expects a weight 1/2 series")
    images = [xi_term(t) for t in S.terms]
    return SeriesAssembly(_merge(t for t in images if t is not None), S.d_max,
                          f"xi({S.descriptor})", S.ctx, THREE_HALVES)


def fd_step(index, base: float = 1e-3) -> float:
    """Step for differencing a term with frequency 2 pi |m| in u."""
    return min(base, 0.01 / (2 * math.pi * abs(float(index)) + 1.0))


def xi_numeric(func, tau: complex, h: float = 1e-3) -> complex:
    """2 i v^{1/2} conj(dF/d tau-bar) with sixth order central differences."""
    du = _d1(lambda s: func(tau + s), h)
    dv = _d1(lambda s: func(tau + 1j * s), h)
    dbar = 0.5 * (du + 1j * dv)
    return 2j * math.sqrt(tau.imag) * dbar.conjugate()


def _d1(g, h: float) -> complex:
    return (g(3 * h) - 9 * g(2 * h) + 45 * g(h) - 45 * g(-h) + 9 * g(-2 * h) - g(-3 * h)) / (60 * h)


def _d2(g, h: float) -> complex:
    return (2 * g(3 * h) - 27 * g(2 * h) + 270 * g(h) - 490 * g(0.0) + 270 * g(-h)
            - 27 * g(-2 * h) + 2 * g(-3 * h)) / (180 * h * h)


# The growing complementary terms reach ~1e5 at v = 2, so the Laplacian
# stencil is limited by rounding (|H| eps / h^2) rather than truncation;
# a sixth order stencil at h = 5e-3 balances the two.
LAPLACIAN_STEP = 5e-3


def laplacian_numeric(func, tau: complex, k: float = 0.5, h: float = LAPLACIAN_STEP) -> complex:
    """Delta_k = -v^2 (d_u^2 + d_v^2) + i k v (d_u + i d_v), by central differences."""
    v = tau.imag
    duu = _d2(lambda s: func(tau + s), h)
    dvv = _d2(lambda s: func(tau + 1j * s), h)
    du = _d1(lambda s: func(tau + s), h)
    dv = _d1(lambda s: func(tau + 1j * s), h)
    return -v * v * (duu + dvv) + 1j * k * v * (du + 1j * dv)


def theta_unary(tau: complex, n_max: int = 60) -> complex:
    """sum_{n in Z} q^{n^2}."""
    return 1 + 2 * sum(cmath.exp(2j * math.pi * n * n * tau) for n in range(1, n_max + 1))


@dataclass(frozen=True)
class LaplacianReport:
    tau: complex
    lhs: complex
    rhs: complex
    residual: float


def laplacian_rhs(S: SeriesAssembly, a0, tau: complex) -> complex:
    """Expected Delta H: -(a0/8 pi) theta(tau), times 2 in the lattice normalization."""
    scale = S.ctx.scale
    return -scale * float(a0) / (8 * math.pi) * theta_unary(tau)


def laplacian_check(S: SeriesAssembly, a0, samples: Iterable[complex], h: float = LAPLACIAN_STEP) -> list[LaplacianReport]:
    out = []
    for tau in samples:
        tau = complex(tau)
        lhs = laplacian_numeric(lambda z: evaluate_H(S, z, v_min=0.0).value, tau, 0.5, h)
        rhs = laplacian_rhs(S, a0, tau)
        out.append(LaplacianReport(tau, lhs, rhs, abs(lhs - rhs)))
    return out
