"""Integral binary quadratic forms and the groups Gamma(1), Gamma_0^*(p).

Conventions
-----------
A matrix ``g`` acts on forms by ``g.Q = Q o g^{-1}`` (scaled back to the
same discriminant when ``det g = p``), so that the root ``z_Q`` of
``Q(z, 1)`` satisfies ``z_{g.Q} = g z_Q``. Elements of Gamma_0^*(p) outside
Gamma_0(p) are stored as integer matrices ``(p a, b; p c, p d)`` of
determinant ``p``; they act on the upper half plane like their
``1/sqrt(p)`` multiples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from modtrace.errors import DomainError


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, math.isqrt(n) + 1))


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


@dataclass(frozen=True)
class Mat:
    """Integer 2x2 matrix (a, b; c, d)."""

    a: int
    b: int
    c: int
    d: int

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, o: "Mat") -> "Mat":
        m = Mat(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)
        return m.normalized()

    def normalized(self) -> "Mat":
        # products of two Fricke-type matrices pick up a scalar factor p
        g = math.gcd(math.gcd(self.a, self.b), math.gcd(self.c, self.d))
        if g > 1 and self.det % (g * g) == 0:
            return Mat(self.a // g, self.b // g, self.c // g, self.d // g)
        return self

    def adj(self) -> "Mat":
        return Mat(self.d, -self.b, -self.c, self.a)

    def inv(self) -> "Mat":
        """Projective inverse (the adjugate, valid for det 1 and Fricke type)."""
        return self.adj()

    def __neg__(self) -> "Mat":
        return Mat(-self.a, -self.b, -self.c, -self.d)

    def projective_key(self) -> tuple[int, int, int, int]:
        t = (self.a, self.b, self.c, self.d)
        neg = tuple(-x for x in t)
        return max(t, neg)

    def act(self, z):
        """Moebius action on a complex number or numpy array."""
        return (self.a * z + self.b) / (self.c * z + self.d)

    def as_real(self) -> np.ndarray:
        s = math.sqrt(self.det)
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float) / s

    def trace(self) -> int:
        return self.a + self.d


IDENTITY = Mat(1, 0, 0, 1)
S = Mat(0, -1, 1, 0)


def T(k: int = 1) -> Mat:
    return Mat(1, k, 0, 1)


@dataclass(frozen=True)
class Group:
    """Gamma(1) when p = 1, otherwise Gamma_0^*(p) for a prime p."""

    p: int = 1

    def __post_init__(self):
        if self.p != 1 and not is_prime(self.p):
            raise DomainError(f"Gamma_0^*(p) needs p prime or 1, got {self.p}")

    @property
    def name(self) -> str:
        return "gamma1" if self.p == 1 else f"gamma0star:{self.p}"

    @classmethod
    def parse(cls, text: str) -> "Group":
        text = text.strip().lower()
        if text in ("gamma1", "1", "sl2z"):
            return cls(1)
        if text.startswith("gamma0star:"):
            return cls(int(text.split(":", 1)[1]))
        raise DomainError(f"unknown group {text!r}")

    def contains(self, m: Mat) -> bool:
        p = self.p
        if m.det == 1:
            return m.c % p == 0
        if p > 1 and m.det == p:
            return m.a % p == 0 and m.c % p == 0 and m.d % p == 0
        return False

    @property
    def fricke(self) -> Mat:
        return Mat(0, -1, self.p, 0)

    @property
    def index_factor(self) -> Fraction:
        """Area of the quotient in units of the Gamma(1) area pi/3."""
        if self.p == 1:
            return Fraction(1)
        return Fraction(self.p + 1, 2)


GAMMA1 = Group(1)


@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x, y=1):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def __neg__(self) -> "QuadForm":
        return QuadForm(-self.a, -self.b, -self.c)

    def __iter__(self):
        yield from (self.a, self.b, self.c)

    def __str__(self) -> str:
        return f"[{self.a},{self.b},{self.c}]"

    @property
    def content(self) -> int:
        return math.gcd(math.gcd(self.a, self.b), self.c)

    def primitive(self) -> "QuadForm":
        g = self.content
        return QuadForm(self.a // g, self.b // g, self.c // g)

    def compose(self, h: Mat) -> "QuadForm":
        """Q o h, i.e. (x, y) -> Q(h (x, y)^T)."""
        p, q, r, s = h.a, h.b, h.c, h.d
        a, b, c = self.a, self.b, self.c
        return QuadForm(a * p * p + b * p * r + c * r * r,
                        2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
                        a * q * q + b * q * s + c * s * s)

    def act(self, g: Mat) -> "QuadForm":
        """g.Q = Q o g^{-1}, divided by det g so the discriminant is kept."""
        raw = self.compose(g.adj())
        n = g.det
        if raw.a % n or raw.b % n or raw.c % n:
            raise DomainError(f"{g} does not act integrally on {self}")
        return QuadForm(raw.a // n, raw.b // n, raw.c // n)

    def roots(self) -> tuple:
        """Roots of Q(x, 1) = 0 as floats/complex; None stands for infinity."""
        d = self.disc
        if self.a == 0:
            return (None, -self.c / self.b)
        if d < 0:
            r = complex(-self.b, math.sqrt(-d)) / (2 * self.a)
            return (r, r.conjugate())
        s = math.sqrt(d)
        return ((-self.b - s) / (2 * self.a), (-self.b + s) / (2 * self.a))


# ---------------------------------------------------------------- reduction

def _reduce_definite(q: QuadForm) -> tuple[QuadForm, Mat]:
    """Reduced form equivalent to a positive definite q, and g with g.q = result."""
    h = IDENTITY
    while True:
        a, b, c = q
        k = (a - b) // (2 * a)  # b + 2ak in (-a, a]
        if k:
            q = q.compose(T(k))
            h = h @ T(k)
        a, b, c = q
        if c < a:
            q = q.compose(S)
            h = h @ S
            continue
        if c == a and b < 0:
            q = q.compose(S)
            h = h @ S
        break
    return q, h.inv()


def _normalize_indefinite(q: QuadForm, r: int) -> tuple[QuadForm, Mat]:
    a, b, _ = q
    m = 2 * abs(a)
    if abs(a) > r:  # |a| > sqrt(D): b into (-|a|, |a|]
        target = b - m * ((b + abs(a) - 1) // m)  # b - m*ceil((b-|a|)/m)
    else:  # sqrt(D) - 2|a| < b < sqrt(D), i.e. the largest b' <= isqrt(D)
        target = b + m * ((r - b) // m)
    k = (target - b) // (2 * a)
    if k == 0:
        return q, IDENTITY
    return q.compose(T(k)), T(k)


def _is_reduced_indefinite(q: QuadForm, d: int) -> bool:
    a, b, _ = q
    if not (b > 0 and b * b < d):
        return False
    lhs = d + 4 * a * a - b * b  # |sqrt(D) - 2|a|| < b  <=>  lhs < 4|a| sqrt(D)
    return lhs < 0 or lhs * lhs < 16 * a * a * d


def _rho(q: QuadForm, r: int) -> tuple[QuadForm, Mat]:
    q1 = q.compose(S)  # [c, -b, a]
    q2, t = _normalize_indefinite(q1, r)
    return q2, S @ t


def _reduce_indefinite(q: QuadForm) -> tuple[QuadForm, Mat]:
    d = q.disc
    r = math.isqrt(d)
    q, h = _normalize_indefinite(q, r)
    while not _is_reduced_indefinite(q, d):
        q, step = _rho(q, r)
        h = h @ step
    return q, h.inv()


def _cycle(q: QuadForm) -> list[tuple[QuadForm, Mat]]:
    """The rho-cycle of a reduced indefinite form: pairs (form, H) with form = q o H."""
    r = math.isqrt(q.disc)
    out = [(q, IDENTITY)]
    cur, h = q, IDENTITY
    while True:
        cur, step = _rho(cur, r)
        h = h @ step
        if cur == q:
            return out + [(cur, h)]
        out.append((cur, h))


def _canonical_square(q: QuadForm) -> tuple[QuadForm, Mat]:
    for x, y in _square_roots(q):
        g0, s, t = _egcd(x, y)
        if g0 < 0:
            s, t = -s, -t
        h = Mat(x, -t, y, s)  # det = x s + t y = 1
        q1 = q.compose(h)
        if q1.a == 0 and q1.b > 0:
            k = -(q1.c // q1.b)
            q2 = q1.compose(T(k))
            return q2, (h @ T(k)).inv()
    raise AssertionError("square form without a root column giving b > 0")


def canonical(q: QuadForm) -> tuple[QuadForm, Mat]:
    """Canonical Gamma(1) representative of q and g in SL2(Z) with g.q equal to it.

    Definite forms (either sign) reduce to |b| <= a <= c (or its negative);
    nonsquare indefinite forms to the lexicographically smallest form of
    their reduced cycle; square forms to [0, n, c] with 0 <= c < n.
    """
    d = q.disc
    if d == 0:
        raise DomainError("degenerate form")
    if d < 0:
        if q.a < 0:
            red, g = _reduce_definite(-q)
            return -red, g
        return _reduce_definite(q)
    if is_square(d):
        return _canonical_square(q)
    red, g = _reduce_indefinite(q)
    best, best_h = min(_cycle(red)[:-1], key=lambda item: tuple(item[0]))
    # best = red o best_h = best_h^{-1}.red, so best = (best_h^{-1} g).q
    return best, best_h.inv() @ g


def _gamma1_reps(d: int) -> list[QuadForm]:
    if d % 4 not in (0, 1):
        return []
    if d < 0:
        reps = []
        amax = math.isqrt(-d // 3)
        for a in range(1, amax + 1):
            for b in range(-a + 1, a + 1):
                if (b * b - d) % (4 * a):
                    continue
                c = (b * b - d) // (4 * a)
                if c < a or (c == a and b < 0):
                    continue
                reps.append(QuadForm(a, b, c))
        return sorted(reps)
    if is_square(d):
        n = math.isqrt(d)
        return [QuadForm(0, n, c) for c in range(n)]
    r = math.isqrt(d)
    reduced = set()
    for a in range(-r, r + 1):
        if a == 0:
            continue
        for b in range(1, r + 1):
            if (b - d) % 2 or (b * b - d) % (4 * a):
                continue
            q = QuadForm(a, b, (b * b - d) // (4 * a))
            if _is_reduced_indefinite(q, d):
                reduced.add(q)
    reps = []
    while reduced:
        start = min(reduced)
        cyc = [f for f, _ in _cycle(start)[:-1]]
        reduced -= set(cyc)
        reps.append(min(cyc))
    return sorted(reps)


# ------------------------------------------------------------- stabilizers

def _norm_solutions(q: QuadForm, norm: int) -> list[Mat]:
    """Integer matrices fixing q with determinant ``norm``, d(q) < 0."""
    q0 = q.primitive()
    a, b, c = q0
    d0 = q0.disc
    out = []
    umax = math.isqrt(4 * norm // (-d0))
    for u in range(-umax, umax + 1):
        t2 = 4 * norm + d0 * u * u
        if t2 < 0 or not is_square(t2):
            continue
        t0 = math.isqrt(t2)
        for t in {t0, -t0}:
            if (t - b * u) % 2:
                continue
            out.append(Mat((t - b * u) // 2, -c * u, a * u, (t + b * u) // 2))
    return out


def stabilizer(q: QuadForm, group: Group = GAMMA1) -> list[Mat]:
    """Projective stabilizer of a definite form inside the group (one matrix per element)."""
    if q.disc >= 0:
        raise DomainError("finite stabilizers exist for definite forms only")
    cands = _norm_solutions(q, 1)
    if group.p > 1:
        cands += _norm_solutions(q, group.p)
    keys = {}
    for m in cands:
        if group.contains(m):
            keys[m.projective_key()] = m
    return [keys[k] for k in sorted(keys)]


def stabilizer_order(q: QuadForm, group: Group = GAMMA1) -> int:
    return len(stabilizer(q, group))


def stabilizer_order_bruteforce(q: QuadForm, bound: int = 3) -> int:
    """Search SL2(Z) matrices with entries in [-bound, bound] (test oracle)."""
    rng = range(-bound, bound + 1)
    found = set()
    for a, b, c, d in product(rng, repeat=4):
        if a * d - b * c != 1:
            continue
        m = Mat(a, b, c, d)
        if q.act(m) == q:
            found.add(m.projective_key())
    return len(found)


def cm_point(q: QuadForm) -> complex:
    if q.disc >= 0:
        raise DomainError("CM points need negative discriminant")
    if q.a <= 0:
        raise DomainError("normalize to a positive definite representative first")
    return complex(-q.b, math.sqrt(-q.disc)) / (2 * q.a)


# ---------------------------------------------------------------- automorphs

@dataclass(frozen=True)
class Automorph:
    matrix: Mat
    pell: tuple[int, int]
    eigenvalue: float  # > 1; the geodesic has length 2 log(eigenvalue)


def _sl2_automorph(q: QuadForm) -> Mat:
    red, g = _reduce_indefinite(q)  # g.q = red
    _, h = _cycle(red)[-1]  # red o h = red
    m = g.inv() @ h @ g
    if q.act(m) != q:
        raise AssertionError("cycle product does not fix the form")
    return m


def automorph(q: QuadForm, group: Group = GAMMA1) -> Automorph:
    """Generator of the (projective) stabilizer of an indefinite nonsquare form.

    ``pell`` is the fundamental solution of t^2 - d0 u^2 = 4 where d0 is the
    discriminant of the primitive part of q.
    """
    d = q.disc
    if d <= 0 or is_square(d):
        raise DomainError("automorph needs a positive nonsquare discriminant")
    m = _sl2_automorph(q)
    if m.trace() < 0:
        m = -m
    q0 = q.primitive()
    t, u = m.trace(), m.c // q0.a
    if u < 0:
        m, u = m.inv(), -u
        if m.trace() < 0:
            m = -m
    d0 = q0.disc
    eps = (t + u * math.sqrt(d0)) / 2
    if group.p == 1:
        return Automorph(m, (t, u), eps)
    # smallest power lying in Gamma_0(p)
    mk, k = m, 1
    while mk.c % group.p:
        mk, k = mk @ m, k + 1
    best = Automorph(mk, (mk.trace(), mk.c // q0.a), eps ** k)
    # a Fricke-type element has eigenvalue^2 equal to the Gamma_0(p) generator's
    T0 = abs(mk.trace())
    p = group.p
    t2, u2 = p * (T0 + 2), p * (T0 - 2)
    if is_square(t2) and u2 % d0 == 0 and is_square(u2 // d0):
        tt, uu = math.isqrt(t2), math.isqrt(u2 // d0)
        a, b, c = q0
        for t_, u_ in ((tt, uu), (-tt, uu), (tt, -uu), (-tt, -uu)):
            if (t_ - b * u_) % 2:
                continue
            f = Mat((t_ - b * u_) // 2, -c * u_, a * u_, (t_ + b * u_) // 2)
            if group.contains(f) and q.act(f) == q:
                return Automorph(f, (t_, u_), math.sqrt(best.eigenvalue))
    return best


def pell_fundamental(d: int) -> tuple[int, int]:
    """Smallest t, u > 0 with t^2 - d u^2 = 4, found by ascending search."""
    if d <= 0 or is_square(d):
        raise DomainError("Pell equation needs a positive nonsquare d")
    u = 1
    while True:
        t2 = 4 + d * u * u
        if is_square(t2):
            return math.isqrt(t2), u
        u += 1


# -------------------------------------------------------- Gamma_0^*(p) classes

def _p1_point(row: tuple[int, int], p: int) -> tuple[int, int]:
    r, s = row[0] % p, row[1] % p
    if r:
        inv = pow(r, -1, p)
        return (1, s * inv % p)
    return (0, 1)


def _p1_lift(pt: tuple[int, int]) -> Mat:
    """An SL2(Z) matrix whose bottom row reduces to the projective point pt."""
    r, s = pt
    if r == 0:
        return IDENTITY
    return Mat(0, -1, 1, s)


def _stab_generators(rep: QuadForm) -> list[Mat]:
    d = rep.disc
    if d < 0:
        return stabilizer(rep)
    if is_square(d):
        return []
    return [automorph(rep).matrix]


def _orbit_min(pt, gens, p):
    seen = {pt}
    todo = [pt]
    while todo:
        cur = todo.pop()
        for g in gens:
            nxt = _p1_point((cur[0] * g.a + cur[1] * g.c, cur[0] * g.b + cur[1] * g.d), p)
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return min(seen)


def gamma0_key(q: QuadForm, p: int) -> tuple:
    """Invariant labelling the Gamma_0(p)-class of q (with p | a)."""
    rep, g = canonical(q)
    h = g.inv()  # q = h.rep
    pt = _p1_point((h.c, h.d), p)
    return (tuple(rep), _orbit_min(pt, _stab_generators(rep), p))


def fricke_form(q: QuadForm, p: int) -> QuadForm:
    if q.a % p:
        raise DomainError(f"Fricke involution needs p | a, got {q}")
    return QuadForm(p * q.c, -q.b, q.a // p)


def _gamma0star_reps(d: int, p: int) -> list[QuadForm]:
    reps: dict[tuple, QuadForm] = {}
    for rep in _gamma1_reps(d):
        gens = _stab_generators(rep)
        pts = [(0, 1)] + [(1, s) for s in range(p)]
        for pt in pts:
            h = _p1_lift(pt)
            q = rep.act(h)
            if q.a % p:
                continue
            key = (tuple(rep), _orbit_min(pt, gens, p))
            reps.setdefault(key, q)
    parent = {k: k for k in reps}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for key, q in reps.items():
        other = gamma0_key(fricke_form(q, p), p)
        a, b = find(key), find(other)
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = sorted({find(k) for k in reps})
    return [reps[k] for k in roots]


@lru_cache(maxsize=4096)
def class_reps(d: int, group: Group = GAMMA1) -> tuple[QuadForm, ...]:
    """One form per class of discriminant d for the given group.

    d < 0 gives positive definite forms only; square d gives shapes [0, n, c]
    for Gamma(1). Returns an empty tuple when d is 2 or 3 mod 4.
    """
    if d == 0:
        raise DomainError("discriminant 0 is not supported")
    if d % 4 not in (0, 1):
        return ()
    if group.p == 1:
        return tuple(_gamma1_reps(d))
    return tuple(_gamma0star_reps(d, group.p))


def hurwitz_class_number(n: int) -> Fraction:
    """H(n) for n > 0 by counting reduced forms (weights 1/2, 1/3 for i, rho)."""
    d = -n
    if d % 4 not in (0, 1):
        return Fraction(0)
    total = Fraction(0)
    for q in _gamma1_reps(d):
        if q.a == q.b == q.c:
            total += Fraction(1, 3)
        elif q.b == 0 and q.a == q.c:
            total += Fraction(1, 2)
        else:
            total += 1
    return total


# ------------------------------------------------------------ point reduction

def reduce_point(z: complex) -> tuple[complex, Mat]:
    """Move z into the standard fundamental domain; returns (z0, g) with g z = z0."""
    if not z.imag > 0:
        raise DomainError("point must lie in the upper half plane")
    g = IDENTITY
    for _ in range(10000):
        k = math.floor(z.real + 0.5)
        if k:
            z -= k
            g = T(-k) @ g
        if abs(z) < 1.0 - 1e-15:
            z = -1.0 / z
            g = S @ g
        else:
            return z, g
    raise ArithmeticError("reduction did not terminate")


def reduce_points(z: np.ndarray) -> np.ndarray:
    """Vectorized reduce_point for Gamma(1) (points only, no matrices)."""
    z = np.array(z, dtype=complex, copy=True)
    if np.any(z.imag <= 0):
        raise DomainError("points must lie in the upper half plane")
    active = np.ones(z.shape, dtype=bool)
    for _ in range(10000):
        if not active.any():
            return z
        za = z[active]
        za = za - np.floor(za.real + 0.5)
        inside = np.abs(za) < 1.0 - 1e-15
        za[inside] = -1.0 / za[inside]
        z[active] = za
        idx = np.flatnonzero(active)
        active[idx[~inside]] = False
    raise ArithmeticError("reduction did not terminate")


def _best_move(z: complex, p: int) -> tuple[float, Mat | None]:
    """Group element maximizing Im(g z) among bottom rows that can beat Im z."""
    y = z.imag
    best_gain, best = 1.0 + 1e-13, None
    cmax = int(1.0 / y) + 1
    for c in range(p, cmax + 1, p):
        centre = -c * z.real
        for d in range(math.floor(centre) - 1, math.ceil(centre) + 2):
            if math.gcd(c, d) != 1:
                continue
            denom = abs(c * z + d) ** 2
            if denom > 0 and 1.0 / denom > best_gain:
                _, x, w = _egcd(d, c)  # x d + w c = 1
                m = Mat(x, -w, c, d)
                best_gain, best = 1.0 / denom, m
    gmax = int(1.0 / (y * math.sqrt(p))) + 1
    for gam in range(1, gmax + 1):
        centre = -gam * z.real
        for dl in range(math.floor(centre) - 1, math.ceil(centre) + 2):
            if math.gcd(gam, p * dl) != 1:
                continue
            denom = p * abs(gam * z + dl) ** 2
            if denom > 0 and 1.0 / denom > best_gain:
                # (p al, be; p gam, p dl) with p al dl - be gam = 1
                _, x, w = _egcd(p * dl, gam)  # x p dl + w gam = 1
                m = Mat(p * x, -w, p * gam, p * dl)
                best_gain, best = 1.0 / denom, m
    return best_gain, best


def reduce_point_group(z: complex, group: Group = GAMMA1) -> tuple[complex, Mat]:
    """Greedy height maximization modulo the group, then |Re z0| <= 1/2."""
    if group.p == 1:
        return reduce_point(z)
    if not z.imag > 0:
        raise DomainError("point must lie in the upper half plane")
    g = IDENTITY
    for _ in range(1000):
        k = math.floor(z.real + 0.5)
        if k:
            z -= k
            g = T(-k) @ g
        _, m = _best_move(z, group.p)
        if m is None:
            return z, g
        z = complex(m.act(z))
        g = m @ g
    raise ArithmeticError("reduction did not terminate")


# ------------------------------------------------------------- cusps/geodesics

@dataclass(frozen=True)
class CuspDatum:
    """Cusp data: label, width alpha, beta, epsilon = alpha/beta, scaling matrix,
    and the offset k (None when the line meets no coset of interest)."""

    label: str
    alpha: int = 1
    beta: Fraction = Fraction(1)
    sigma: Mat = IDENTITY
    k: Fraction | None = Fraction(0)

    @property
    def epsilon(self) -> Fraction:
        return Fraction(self.alpha) / self.beta


def cusp_scaling(num: int, den: int, group: Group = GAMMA1) -> Mat:
    """Canonical group element sending infinity to the cusp num/den.

    ``den = 0`` stands for infinity itself. For den > 0 the lower right entry
    is the least nonnegative admissible value.
    """
    if den == 0:
        return IDENTITY
    if den < 0:
        num, den = -num, -den
    g = math.gcd(num, den)
    num, den = num // g, den // g
    p = group.p
    if den % p == 0:
        # a d - b c = 1, d = a^{-1} mod c
        d = pow(num, -1, den) if den > 1 else 0
        b = (num * d - 1) // den
        return Mat(num, b, den, d)
    # Fricke type (p a, b; p c, p d) with p a d - b c = 1
    d = pow(p * num, -1, den) if den > 1 else 0
    b = (p * num * d - 1) // den
    return Mat(p * num, b, p * den, p * d)


def _cusp_of(x: tuple[int, int] | None) -> tuple[int, int]:
    return (1, 0) if x is None else x


def _square_roots(q: QuadForm) -> list[tuple[int, int]]:
    """Rational roots of a square-discriminant form as (num, den) with den >= 0."""
    a, b, c = q
    n = math.isqrt(q.disc)
    out = []
    if a == 0:
        out.append((1, 0))
        num, den = -c, b
        g = math.gcd(num, den)
        num, den = num // g, den // g
        if den < 0:
            num, den = -num, -den
        out.append((num, den))
        return out
    for num in (-b - n, -b + n):
        den = 2 * a
        g = math.gcd(num, den)
        num, den = num // g, den // g
        if den < 0:
            num, den = -num, -den
        out.append((num, den))
    return out


@dataclass(frozen=True)
class GeodesicEnd:
    cusp: tuple[int, int]  # (num, den); (1, 0) is infinity
    sigma: Mat
    r: Fraction  # real part in the coordinates sigma^{-1}
    height: Fraction  # split height c in those coordinates, exact


@dataclass(frozen=True)
class GeodesicDatum:
    form: QuadForm
    kind: str  # "closed" or "infinite"
    automorph: Automorph | None = None
    plus: GeodesicEnd | None = None
    minus: GeodesicEnd | None = None

    @property
    def r_plus(self) -> Fraction:
        return self.plus.r

    @property
    def r_minus(self) -> Fraction:
        return self.minus.r


def _end_for(q: QuadForm, group: Group) -> tuple[tuple[int, int], Mat, Fraction]:
    """The endpoint cusp of q's oriented geodesic, its scaling matrix and real part."""
    for cusp in _square_roots(q):
        sigma = cusp_scaling(*cusp, group)
        qq = q.compose(sigma)
        n = sigma.det
        qq = QuadForm(Fraction(qq.a, n), Fraction(qq.b, n), Fraction(qq.c, n))
        if qq.a != 0:
            raise AssertionError("scaling matrix does not move the root to infinity")
        if qq.b > 0:
            return cusp, sigma, Fraction(-qq.c) / qq.b
    raise AssertionError("no endpoint found")


def infinite_geodesic_datum(q: QuadForm, c_plus: float = 1.0, group: Group = GAMMA1) -> GeodesicDatum:
    """Cusp pair, real parts r_+, r_- and split heights of a square-discriminant geodesic.

    The + end is the endpoint of the oriented geodesic; the - end is the
    endpoint of the oppositely oriented one (the start point).
    """
    d = q.disc
    if d <= 0 or not is_square(d):
        raise DomainError("infinite geodesics need a positive square discriminant")
    if not c_plus > 0:
        raise DomainError("split height must be positive")
    cp, sp_, rp = _end_for(q, group)
    cm, sm, rm = _end_for(-q, group)
    # height on the - side of the point r_+ + i c_+, kept exact
    c = Fraction(c_plus)
    w = sm.inv() @ sp_
    c_minus = w.det * c / ((w.c * rp + w.d) ** 2 + (w.c * c) ** 2)
    if group.p == 1 and c_minus != 1 / (c * rp.denominator ** 2):
        raise AssertionError("reciprocal height law violated")
    return GeodesicDatum(q, "infinite", None,
                         GeodesicEnd(cp, sp_, rp, c),
                         GeodesicEnd(cm, sm, rm, c_minus))


def closed_geodesic_datum(q: QuadForm, group: Group = GAMMA1) -> GeodesicDatum:
    return GeodesicDatum(q, "closed", automorph(q, group))


def geodesic_frame(q: QuadForm) -> np.ndarray:
    """Real SL2 matrix sending 0 and infinity to the two roots of q (d > 0, a != 0)."""
    w1, w2 = q.roots()
    lo, hi = min(w1, w2), max(w1, w2)
    m = np.array([[hi, lo], [1.0, 1.0]])
    return m / math.sqrt(hi - lo)
