"""Traces of modular functions: CM points, closed geodesics, regularized
infinite geodesics, complementary traces and the zero-index trace.

Values are in the discriminant convention: tr_d sums over classes of forms of
discriminant d. :class:`LatticeContext` converts to the lattice (m, h) indexing
used for level one theta lifts, where traces are twice as large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from modtrace import arbcalc
from modtrace.errors import DomainError, PrecisionError
from modtrace.qseries import (ModularFunctionInput, builtin, evaluate, log_coefficient_envelope,
                              evaluate_many)
from modtrace.quadforms import (GAMMA1, CuspDatum, GeodesicDatum, GeodesicEnd, Group, QuadForm,
                                automorph, class_reps, cm_point, geodesic_frame,
                                infinite_geodesic_datum, is_square, reduce_point_group,
                                stabilizer_order)
from modtrace.quadrature import composite, legendre_rule
from modtrace.specialfn import digamma, exp_integral_EI, sigma1

# Sign of a(0) log c in the split-height regularization. With +1 the two
# ends contribute a(0) log(c_+ c_-) = -2 a(0) log b, which is what the
# closed gcd formula for tr(1) at square indices requires. The digamma
# contour produces -a(0) log c on its own; _digamma_end shifts it to match.
LOG_HEIGHT_SIGN = 1


@dataclass(frozen=True)
class TraceResult:
    d: int
    value: complex
    method: str
    error: float
    details: tuple = field(default=(), compare=False)

    @property
    def real(self) -> float:
        return float(np.real(self.value))


@dataclass(frozen=True)
class LatticeContext:
    """Index bookkeeping for the level N lattice of trace zero matrices
    (b, c/N; a, -b). Only N = 1 is wired to the discriminant traces.

    ``convention`` is "intro" (discriminant traces) or "lattice" ((m, h)
    traces, twice the discriminant ones for N = 1).
    """

    N: int = 1
    h: int = 0
    convention: str = "intro"
    cusps: tuple[CuspDatum, ...] = (CuspDatum("inf", 1, Fraction(1)),)

    def __post_init__(self):
        if self.convention not in ("intro", "lattice"):
            raise DomainError(f"unknown convention {self.convention!r}")
        if self.N < 1:
            raise DomainError("level must be positive")

    @classmethod
    def level(cls, N: int, h: int = 0, convention: str = "intro") -> "LatticeContext":
        cusp = CuspDatum("inf", 1, Fraction(1, N))
        return cls(N, h % (2 * N), convention, (cusp,))

    @property
    def scale(self) -> int:
        return 2 if self.convention == "lattice" else 1

    def disc(self, m) -> int:
        d = 4 * self.N * Fraction(m)
        if d.denominator != 1:
            raise DomainError(f"index {m} is not of the form d/(4N)")
        return int(d)

    def index(self, d: int) -> Fraction:
        return Fraction(d, 4 * self.N)

    def compatible(self, d: int, h: int | None = None) -> bool:
        """Whether forms with discriminant d have b = h mod 2N for some b."""
        h = self.h if h is None else h
        n2 = 2 * self.N
        return any((b * b - d) % (4 * self.N) == 0 for b in range(n2) if b % n2 == h % n2)


def _group(f: ModularFunctionInput, group: Group | None) -> Group:
    g = f.group if group is None else group
    if g != f.group:
        raise DomainError(f"input is for {f.group.name}, not {g.name}")
    return g


def _empty(d: int) -> TraceResult:
    return TraceResult(d, 0.0, "empty", 0.0)


# -------------------------------------------------------------- CM traces

def trace_cm(f: ModularFunctionInput, d: int, group: Group | None = None, tol: float = 1e-10) -> TraceResult:
    """sum over classes of f(z_Q)/|stabilizer| for d < 0."""
    group = _group(f, group)
    if d >= 0:
        raise DomainError("CM traces need d < 0")
    total, err, rows = 0j, 0.0, []
    for q in class_reps(d, group):
        w = stabilizer_order(q, group)
        ev = evaluate(f, cm_point(q), tol)
        total += ev.value / w
        err += ev.bound / w
        rows.append((str(q), w))
    return TraceResult(d, total, "cm", err + 1e-15 * abs(total), tuple(rows))


def trace_cm_exact_constant(d: int, group: Group = GAMMA1) -> Fraction:
    """tr_d(1) as an exact rational (a weighted class number)."""
    if d >= 0:
        raise DomainError("CM traces need d < 0")
    return sum((Fraction(1, stabilizer_order(q, group)) for q in class_reps(d, group)), Fraction(0))


# -------------------------------------------------------- closed geodesics

def _geodesic_integral(f: ModularFunctionInput, q: QuadForm, length: float, panels: int, order: int) -> complex:
    g = geodesic_frame(q)
    (a, b), (c, dd) = g

    def integrand(u):
        w = 1j * np.exp(u)
        z = (a * w + b) / (c * w + dd)
        if np.any(z.imag <= 0):
            z = np.where(z.imag > 0, z, np.conj(z))
        return evaluate_many(f, z)[0]

    return composite(integrand, np.linspace(0.0, length, panels + 1), order)


def cycle_integral(f: ModularFunctionInput, q: QuadForm, group: Group | None = None,
                   panels: int | None = None, order: int = 16, tol: float = 1e-9) -> tuple[complex, float]:
    """int_{C_Q} f(z) dz/Q(z, 1) over one period of a closed geodesic, with
    the difference between the last two panel counts as error.

    The geodesic is moved onto the imaginary axis, where the measure is
    dy/(sqrt(d) y) on [i, eps^2 i]. With ``panels`` given the integral is
    computed with that many and twice as many panels; otherwise panels are
    doubled until the results agree to ``tol``.
    """
    group = _group(f, group)
    d = q.disc
    if d <= 0 or is_square(d):
        raise DomainError("closed geodesics need a positive nonsquare discriminant")
    length = 2.0 * math.log(automorph(q, group).eigenvalue)
    if panels is not None:
        coarse = _geodesic_integral(f, q, length, panels, order)
        fine = _geodesic_integral(f, q, length, 2 * panels, order)
    else:
        p = max(4, int(math.ceil(2 * length)))
        coarse = _geodesic_integral(f, q, length, p, order)
        for _ in range(14):
            p *= 2
            fine = _geodesic_integral(f, q, length, p, order)
            if abs(fine - coarse) <= tol * math.sqrt(d):
                break
            coarse = fine
        else:
            raise PrecisionError(f"panel doubling did not settle for {q}")
    root = math.sqrt(d)
    return complex(fine) / root, float(abs(fine - coarse)) / root


def trace_closed_geodesic(f: ModularFunctionInput, d: int, group: Group | None = None,
                          panels: int | None = None, order: int = 16, tol: float = 1e-9) -> TraceResult:
    """(1/2 pi) sum_Q int_{C_Q} f dz/Q(z,1) for positive nonsquare d."""
    group = _group(f, group)
    if d <= 0 or is_square(d):
        raise DomainError("closed geodesics need a positive nonsquare discriminant")
    total, err, rows = 0j, 0.0, []
    for q in class_reps(d, group):
        val, e = cycle_integral(f, q, group, panels, order, tol)
        total += val / (2 * math.pi)
        err += e / (2 * math.pi)
        a = automorph(q, group)
        rows.append((str(q), a.pell, 2.0 * math.log(a.eigenvalue)))
    return TraceResult(d, total, "closed-geodesic", err, tuple(rows))


# ---------------------------------------------------- square discriminants

def _log_abs(x) -> float:
    x = abs(x)
    if isinstance(x, Fraction):
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x) if x else -math.inf


def _log_coeff(f: ModularFunctionInput, n: int, env=None) -> float:
    if n <= f.aplus.n_max:
        c = f.aplus[n]
        return _log_abs(c) if c else -math.inf
    env = log_coefficient_envelope(f) if env is None else env
    return env(n) if env else -math.inf


def log_magnitude(f: ModularFunctionInput, y: float) -> float:
    """log of sum |a(n)| e^{-2 pi n y}: a size estimate for f at height y."""
    terms = [_log_coeff(f, n) - 2 * math.pi * n * y for n in range(f.aplus.n_min, f.aplus.n_max + 1)]
    terms += [_log_abs(a) - 2 * math.pi * n * y for n, a in f.aminus]
    terms = [t for t in terms if t > -math.inf]
    if not terms:
        return -math.inf
    top = max(terms)
    return top + math.log(sum(math.exp(t - top) for t in terms))


def bandwidth(f: ModularFunctionInput, y: float, floor: float) -> int:
    """Largest n whose term a(n) e^{-2 pi n y} exceeds e^{floor}."""
    env = log_coefficient_envelope(f)
    last, n, below = 0, 1, 0
    while below < 50 and n < 200000:
        if _log_coeff(f, n, env) - 2 * math.pi * n * y > floor:
            last, below = n, 0
        else:
            below += 1
        n += 1 if n < 2000 else 16
    return last


def _extended(f: ModularFunctionInput, n_needed: int) -> ModularFunctionInput:
    if n_needed <= f.aplus.n_max:
        return f
    if f.growth_rigorous and f.group.p == 1 and f.is_holomorphic and f.name[:1] == "j":
        return builtin(f.name, n_needed)
    raise PrecisionError(f"{f.name}: coefficients through q^{n_needed} needed, "
                         f"input stops at q^{f.aplus.n_max}")


def _reduced_height(z: complex, group: Group) -> float:
    return reduce_point_group(z, group)[0].imag


@dataclass(frozen=True)
class EndValue:
    value: complex
    error: float
    backend: str


def _ei_end(f: ModularFunctionInput, end: GeodesicEnd, tol: float) -> EndValue:
    """a(0) s log c + sum_{n != 0} a(n) e(n r) EI(2 pi n c) + a^- tails, in arb."""
    c_exact, r = end.height, end.r
    c = float(c_exact)
    env = log_coefficient_envelope(f)
    # stop once the envelope times the exponential-integral decay is below tol
    n_stop = f.aplus.n_max
    if env is not None:
        n = 1
        while True:
            lt = env(n) - 2 * math.pi * n * c - math.log(2 * math.pi * n * c)
            if n > 8 and lt < math.log(tol) - 10:
                n_stop = n
                break
            n += 1
    f = _extended(f, n_stop)
    peak = max(_log_coeff(f, n) - 2 * math.pi * n * c for n in range(f.aplus.n_min, n_stop + 1))
    dps = arbcalc.digits_for(math.exp(min(peak, 700.0)) if peak < 700 else 1e300, tol)
    if peak >= 700:
        dps = int(peak / math.log(10)) + int(-math.log10(tol)) + 10
    with arbcalc.working_digits(dps):
        A = arbcalc.arb
        total = arbcalc.acb(0)
        two_pi_c = 2 * A.pi() * arbcalc.exact(c_exact)
        rr = arbcalc.exact(r)
        for n in range(f.aplus.n_min, n_stop + 1):
            a = f.aplus[n] if n <= f.aplus.n_max else 0
            if not a or n == 0:
                continue
            phase = (arbcalc.acb(0, 2 * n) * A.pi() * rr).exp()
            total += arbcalc.exact(a) * phase * arbcalc.exp_integral_EI(two_pi_c * n)
        a0 = f.aplus[0]
        if a0:
            total += LOG_HEIGHT_SIGN * arbcalc.exact(a0) * arbcalc.exact(c_exact).log()
        for n, a in f.aminus:
            phase = (arbcalc.acb(0, 2 * n) * A.pi() * rr).exp()
            total += arbcalc.exact(a) * phase * arbcalc.e1(two_pi_c * (-n))
        value = complex(total)
        err = arbcalc.radius(total)
    return EndValue(value, err + tol, "arb")


def _contour_edges(T: float, waves: float, per_panel: float) -> list[float]:
    half = [0.0]
    x = 0.0
    osc = per_panel / max(waves, 1.0)
    while x < 0.5:
        dist = math.hypot(x, T)
        x = min(0.5, x + min(0.5 * dist, osc, 0.25))
        half.append(x)
    return half + [1.0 - e for e in reversed(half[:-1])]


def _segment_edges(f: ModularFunctionInput, r: float, c: float, T: float, group: Group) -> list[float]:
    """Edges in u = log y between log c and log T, sized by the local growth rate."""
    lo, hi = sorted((math.log(c), math.log(T)))
    m = max(1, f.order)
    edges = [lo]
    u = lo
    while u < hi:
        y = math.exp(u)
        rate = 2 * math.pi * m * max(_reduced_height(complex(r, y), group), 1.0) + 1.0
        u = min(hi, u + min(0.25, 2.0 / rate))
        edges.append(u)
    return edges


def _nodes_for(dps: int) -> int:
    return max(20, int(math.ceil(0.6 * dps)) + 14)


def _path_profile(f: ModularFunctionInput, r: float, c: float, T: float, group: Group, tol: float):
    """Peak log size of the integrands (segment and contour) and the contour's bandwidth."""
    xs = np.linspace(0.0, 1.0, 257)
    ys = np.exp(np.linspace(math.log(min(c, T)), math.log(max(c, T)), 65))
    heights = [_reduced_height(complex(r + x, T), group) for x in xs]
    heights += [_reduced_height(complex(r, y), group) for y in ys]
    peak = log_magnitude(f, max(heights))
    psi_size = math.log(4.0 + 2.0 / T + abs(math.log(T)))
    peak_total = max(peak, 0.0) + psi_size
    floor = math.log(tol) - 6.0
    waves = bandwidth(f, T, floor) + max(1, f.order)
    return peak_total, waves


def _digamma_end(f: ModularFunctionInput, end: GeodesicEnd, T: float, tol: float,
                 backend: str = "auto") -> EndValue:
    """int_c^T f^+(r+iy) dy/y - 1/2 int_{iT}^{iT+1} f^+(z+r)(psi(z)+psi(1-z)) dz + a^- tails."""
    c, r = float(end.height), float(end.r)
    T = Fraction(T)
    group = f.group
    peak, waves = _path_profile(f, r, c, float(T), group, tol)
    magnitude = math.exp(min(peak, 700.0))
    use_double = backend == "double" or (backend == "auto" and magnitude * 1e-16 * 50 < 0.1 * tol)
    if use_double:
        value, err = _digamma_end_double(f, end, T, waves)
        back = "double"
    else:
        dps = arbcalc.digits_for(magnitude, tol) if peak < 700 else int(peak / 2.3) + 20
        value, err = _digamma_end_arb(f, end, T, waves, dps)
        back = "arb"
    a0 = f.aplus[0]
    if a0 and LOG_HEIGHT_SIGN == 1:
        value += 2 * float(a0) * math.log(end.height)
    # a^- part: int_c^oo f^-(r+iy) dy/y analytically
    for n, a in f.aminus:
        value += float(a) * complex(np.exp(2j * math.pi * n * float(end.r))) * \
            exp_integral_EI(2 * math.pi * (-n) * c)
    return EndValue(value, err, back)


def _plus_part_many(f: ModularFunctionInput, z: np.ndarray) -> np.ndarray:
    vals = evaluate_many(f, z, tol=1e-9)[0]
    for n, a in f.aminus:
        vals = vals - float(a) * np.exp(2j * np.pi * n * np.conj(z))
    return vals


def _digamma_end_double(f, end, T, waves):
    c, r = float(end.height), float(end.r)
    T = float(T)
    group = f.group
    order = 24
    edges = np.array(_contour_edges(T, waves, 3.0))

    def contour(x):
        z = x + 1j * T
        return _plus_part_many(f, z + r) * (digamma(z) + digamma(1 - z))

    def segment(u):
        y = np.exp(u)
        return _plus_part_many(f, r + 1j * y)

    seg_edges = np.array(_segment_edges(f, r, c, T, group))
    con = composite(contour, edges, order)
    con_check = composite(contour, edges, order - 8)
    seg = composite(segment, seg_edges, order) if T != c else 0.0
    seg_check = composite(segment, seg_edges, order - 8) if T != c else 0.0
    sign = 1.0 if T >= c else -1.0
    value = sign * seg - 0.5 * con
    err = abs(seg - seg_check) + 0.5 * abs(con - con_check) + 1e-13 * abs(value)
    return complex(value), float(err)


def _digamma_end_arb(f, end, T, waves, dps):
    c, r = end.height, end.r
    group = f.group
    with arbcalc.working_digits(dps):
        A, C = arbcalc.arb, arbcalc.acb
        ev = arbcalc.Evaluator(f)
        rr = arbcalc.exact(r)
        TT = arbcalc.exact(T)
        plus = ev.plus_part if f.aminus else ev
        order = _nodes_for(dps)

        def contour(x):
            z = C(x, TT)
            return plus(z + rr) * ((z).digamma() + (1 - z).digamma())

        def segment(u):
            y = u.exp()
            return plus(C(rr, y))

        edges = [A(e) for e in _contour_edges(T, waves, 3.0)]
        con = arbcalc.gauss_edges(lambda x: contour(x.real), [C(e) for e in edges], order)
        if T != c:
            seg_edges = [C(A(e)) for e in _segment_edges(f, float(r), float(c), float(T), group)]
            seg_edges[0] = C(arbcalc.exact(min(c, T)).log())
            seg_edges[-1] = C(arbcalc.exact(max(c, T)).log())
            seg = arbcalc.gauss_edges(lambda u: segment(u.real), seg_edges, order)
            if T < c:
                seg = -seg
        else:
            seg = C(0)
        total = seg - con / 2
        return complex(total), arbcalc.radius(total) + 1e-13 * (abs(complex(total)) + 1.0)


@dataclass(frozen=True)
class SquareOptions:
    """Split height c_+ and contour heights for square-discriminant traces.

    ``c_plus=None`` picks, per class, the height where both ends sit equally
    high (c_+ = c_- = 1/b for r_+ = a/b at level one), which keeps the
    exponential-integral sums short. ``T_scale`` puts the contours at
    T_pm = T_scale * c_pm; ``T_pm`` fixes both heights explicitly.
    """

    c_plus: float | None = None
    T_scale: float = 1.0
    T_pm: tuple[float, float] | None = None
    tol: float = 1e-10
    backend: str = "auto"


def balanced_height(q: QuadForm, group: Group = GAMMA1) -> Fraction:
    """A split height c_+ with c_+ close to c_- (equal at level one)."""
    datum = infinite_geodesic_datum(q, 1, group)
    if group.p == 1:
        return Fraction(1, datum.plus.r.denominator)
    # c_- scales like 1/c_+ for heights below the frame's radius
    return Fraction(math.sqrt(datum.minus.height)).limit_denominator(64)


def square_period(f: ModularFunctionInput, q: QuadForm, variant: str = "ei",
                  opts: SquareOptions = SquareOptions()) -> tuple[complex, float, GeodesicDatum, tuple]:
    """The regularized integral of f dz/(z - r) along the geodesic of q (both ends)."""
    c_plus = opts.c_plus if opts.c_plus is not None else balanced_height(q, f.group)
    datum = infinite_geodesic_datum(q, c_plus, f.group)
    parts = []
    for k, end in enumerate((datum.plus, datum.minus)):
        if variant == "ei":
            parts.append(_ei_end(f, end, opts.tol))
        elif variant == "digamma":
            T = Fraction(opts.T_pm[k]) if opts.T_pm is not None else Fraction(opts.T_scale) * end.height
            parts.append(_digamma_end(f, end, T, opts.tol, opts.backend))
        else:
            raise DomainError(f"unknown variant {variant!r}")
    value = sum(p.value for p in parts)
    return value, sum(p.error for p in parts), datum, tuple(p.backend for p in parts)


def trace_square_regularized(f: ModularFunctionInput, d: int, group: Group | None = None,
                             c_plus: float | None = None, variant: str = "ei", T_scale: float = 1.0,
                             T_pm: tuple[float, float] | None = None, tol: float = 1e-10,
                             backend: str = "auto") -> TraceResult:
    """(1/2 pi) sum_Q (1/sqrt d) times the regularized period of each class.

    ``variant="ei"`` sums exponential integrals of the Fourier coefficients at
    both cusp ends; ``variant="digamma"`` integrates along the truncated
    geodesic and the horizontal digamma-weighted segments at heights T_pm.
    """
    group = _group(f, group)
    if d <= 0 or not is_square(d):
        raise DomainError("square traces need a positive square discriminant")
    opts = SquareOptions(c_plus, T_scale, T_pm, tol, backend)
    root = math.isqrt(d)
    total, err, rows = 0j, 0.0, []
    for q in class_reps(d, group):
        val, e, datum, backs = square_period(f, q, variant, opts)
        total += val
        err += e
        rows.append((str(q), str(datum.r_plus), str(datum.r_minus), datum.plus.height,
                     datum.minus.height, backs))
    scale = 1.0 / (2 * math.pi * root)
    method = "regularized-EI" if variant == "ei" else "regularized-digamma"
    return TraceResult(d, total * scale, method, err * scale, tuple(rows))


def central_value_sides(f: ModularFunctionInput, tol: float = 1e-10) -> tuple[complex, complex, float]:
    """Both sides of the central value identity for the imaginary axis:
    2 sum_{n != 0} a(n) EI(2 pi n) and -2 Re int_i^{i+1} f(z) psi(z) dz."""
    if f.group.p != 1:
        raise DomainError("the central value identity is stated for level one")
    if f.aplus[0] != 0:
        raise DomainError("the central value identity needs a vanishing constant term")
    q = QuadForm(0, 1, 0)
    ei_side, e1, _, _ = square_period(f, q, "ei", SquareOptions(tol=tol))

    def integrand(x):
        z = x + 1j
        return evaluate_many(f, z)[0] * digamma(z)

    edges = np.array(_contour_edges(1.0, bandwidth(f, 1.0, math.log(tol) - 6) + 1, 3.0))
    val = composite(integrand, edges, 24)
    chk = composite(integrand, edges, 16)
    contour_side = -2.0 * val.real
    return ei_side, contour_side, e1 + 2 * abs(val - chk)


def trace_square_remark_constant(m: int, ctx: LatticeContext = LatticeContext()) -> float:
    """(1/(pi m)) sum_{k=1}^{2 m eps} log(gcd(k beta, 2m)/(2m)) for the single cusp of ctx."""
    if m < 1:
        raise DomainError("m must be a positive integer")
    if len(ctx.cusps) != 1:
        raise DomainError("the closed formula is implemented for single-cusp contexts")
    cusp = ctx.cusps[0]
    eps = cusp.epsilon
    if eps.denominator != 1:
        raise DomainError("2 m eps must be an integer")
    total = 0.0
    for k in range(1, 2 * m * int(eps) + 1):
        g = _rational_gcd(k * cusp.beta, Fraction(2 * m))
        total += math.log(g / (2 * m))
    return total / (math.pi * m)


def _rational_gcd(a: Fraction, b: Fraction) -> Fraction:
    den = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    return Fraction(math.gcd(int(a * den), int(b * den)), den)


# ------------------------------------------------------ complementary traces

def trace_complementary(f: ModularFunctionInput, d: int, group: Group | None = None) -> complex:
    """sum over square classes of sum_{n<0} a(n) (e(n r_+) + e(n r_-)).

    This is the coefficient of sqrt(v) beta^c(-4 pi d v) q^d in H(tau, f).
    """
    group = _group(f, group)
    if d <= 0 or not is_square(d):
        return 0.0
    principal = f.aplus.principal_part()
    if not principal:
        return 0.0
    total = 0j
    for q in class_reps(d, group):
        datum = infinite_geodesic_datum(q, 1.0, group)
        for end in (datum.plus, datum.minus):
            for n, a in principal.items():
                total += float(a) * complex(np.exp(2j * math.pi * float(n * end.r)))
    return _clean(total)


def trace_complementary_cusp_formula(f: ModularFunctionInput, d: int) -> complex:
    """Single-cusp level one form of the complementary trace:
    2 sqrt(d) sum_{k >= 1} a(-sqrt(d) k), both ends having real part 0."""
    if f.group.p != 1:
        raise DomainError("the cusp formula is wired for level one only")
    if d <= 0 or not is_square(d):
        return 0.0
    n = math.isqrt(d)
    s = sum((f.aplus[-n * k] for k in range(1, f.order // n + 1)), 0)
    return _clean(complex(2 * n * s))


def _clean(z: complex) -> complex:
    z = complex(z)
    re = 0.0 if abs(z.real) < 1e-12 else z.real
    im = 0.0 if abs(z.imag) < 1e-12 else z.imag
    return complex(re, im)


# --------------------------------------------------------------- index zero

def trace_zero(f: ModularFunctionInput, h: int = 0, ctx: LatticeContext = LatticeContext()) -> Fraction:
    """-(1/2 pi) times the regularized average value of f, exactly.

    Level one: 4 sum_{n >= 0} a(-n) sigma_1(n) with sigma_1(0) = -1/24.
    Gamma_0^*(p): 2 [sum a(-n) sigma_1(n) + p sum a(-p n) sigma_1(n)]
    (the two Gamma_0(p) cusps seen from infinity), halved by the Fricke
    involution.
    """
    if h % (2 * ctx.N):
        return Fraction(0)
    p = f.group.p
    order = f.order

    def coef(n):
        c = f.aplus[-n] if -n >= f.aplus.n_min else 0
        return Fraction(c)

    s1 = sum((coef(n) * sigma1(n) for n in range(0, order + 1)), Fraction(0))
    if p == 1:
        return 4 * s1
    s2 = sum((coef(p * n) * sigma1(n) for n in range(0, order // p + 1)), Fraction(0))
    return 2 * (s1 + p * s2)


def volume(group: Group = GAMMA1) -> Fraction:
    """vol(M) = -(1/2 pi) times the hyperbolic area."""
    return -Fraction(1, 6) * group.index_factor


@dataclass(frozen=True)
class AverageValue:
    value: complex  # truncated integral plus the exact constant-term tail beyond T
    truncated: complex
    error: float
    height: float


def fundamental_domain_integral(func, T: float, nx: int = 48, ny: int = 24) -> tuple[complex, float]:
    """int over {|x| <= 1/2, |z| >= 1, y <= T} of func(z) dx dy / y^2."""
    def run(ox, oy):
        xg, xw = legendre_rule(ox)
        yg, yw = legendre_rule(oy)
        total = 0j
        # lower piece: y from sqrt(1-x^2) to 1, panels in x
        xe = np.linspace(-0.5, 0.5, 9)
        for a, b in zip(xe[:-1], xe[1:]):
            x = 0.5 * (a + b) + 0.5 * (b - a) * xg
            wx = 0.5 * (b - a) * xw
            y0 = np.sqrt(1 - x * x)
            Y = y0[:, None] + (1 - y0)[:, None] * 0.5 * (yg[None, :] + 1)
            W = wx[:, None] * (1 - y0)[:, None] * 0.5 * yw[None, :]
            Z = x[:, None] + 1j * Y
            total += np.sum(W * func(Z.ravel()).reshape(Z.shape) / Y ** 2)
        # upper strip y in [1, T]: periodic in x, so a uniform rule is exact for low modes
        nxs = 8 * ox
        xs = -0.5 + (np.arange(nxs) + 0.5) / nxs
        ye = np.exp(np.linspace(0.0, math.log(T), 1 + max(1, int(4 * T))))
        for a, b in zip(ye[:-1], ye[1:]):
            y = 0.5 * (a + b) + 0.5 * (b - a) * yg
            wy = 0.5 * (b - a) * yw
            Z = xs[:, None] + 1j * y[None, :]
            vals = func(Z.ravel()).reshape(Z.shape)
            total += np.sum(vals.mean(axis=0) * wy / y ** 2)
        return total

    fine, coarse = run(nx, ny), run(nx - 8, ny - 8)
    return fine, abs(fine - coarse)


def average_value_numeric(f: ModularFunctionInput, T: float = 4.0, group: Group | None = None) -> AverageValue:
    """Regularized average value of f by 2-D quadrature over the height-T
    truncated fundamental domain. For Gamma_0^*(p) the domain is the
    standard one together with its images under z -> (z + k)/p, halved.
    """
    group = _group(f, group)
    if T < 1.0:
        raise DomainError("truncation height must be at least 1")
    a0 = complex(float(f.aplus[0]))

    def fz(z):
        return evaluate_many(f, z, tol=1e-8)[0]

    base, err = fundamental_domain_integral(fz, T)
    if group.p == 1:
        return AverageValue(base + a0 / T, base, err, T)
    p = group.p
    extra, err2 = 0j, 0.0
    for k in range(p):
        v, e = fundamental_domain_integral(lambda z, k=k: fz((z + k) / p), T)
        extra += v
        err2 += e
    trunc = 0.5 * (base + extra)
    return AverageValue(trunc + 0.5 * a0 * (1 + p) / T, trunc, 0.5 * (err + err2), T)


# ---------------------------------------------------------------- dispatch

def trace(f: ModularFunctionInput, d: int, group: Group | None = None, variant: str = "ei",
          **kwargs) -> TraceResult:
    """tr_d(f) for any d != 0; d = 2, 3 mod 4 gives an empty (zero) trace."""
    if d == 0:
        val = trace_zero(f)
        return TraceResult(0, complex(float(val)), "zero", 0.0, (str(val),))
    if d % 4 not in (0, 1):
        return _empty(d)
    if d < 0:
        return trace_cm(f, d, group, **{k: v for k, v in kwargs.items() if k == "tol"})
    if is_square(d):
        return trace_square_regularized(f, d, group, variant=variant, **kwargs)
    allowed = {k: v for k, v in kwargs.items() if k in ("panels", "order", "tol")}
    return trace_closed_geodesic(f, d, group, **allowed)


def lattice_trace(f: ModularFunctionInput, m, ctx: LatticeContext, **kwargs) -> TraceResult:
    """Trace of index (m, h) for the level one lattice: twice tr_{4m} when the
    residue class matches, zero otherwise."""
    if ctx.N != 1:
        raise DomainError("lattice traces are wired for N = 1 only")
    m = Fraction(m)
    if m == 0:
        val = trace_zero(f, ctx.h, ctx)
        return TraceResult(0, complex(float(val)), "zero", 0.0)
    d = ctx.disc(m)
    if not ctx.compatible(d):
        return _empty(d)
    res = trace(f, d, **kwargs)
    return replace(res, value=ctx.scale * res.value, error=ctx.scale * res.error)
