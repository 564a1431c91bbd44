"""Independent reference computations used by several test modules."""

import math
from fractions import Fraction


def hurwitz_oracle(n: int) -> Fraction:
    """Weighted count of reduced positive definite forms of discriminant -n
    (weights 1/3 at [a,a,a], 1/2 at [a,0,a])."""
    total = Fraction(0)
    a = 1
    while 3 * a * a <= n:
        for b in range(-a + 1, a + 1):
            if (b * b + n) % (4 * a):
                continue
            c = (b * b + n) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if a == b == c:
                total += Fraction(1, 3)
            elif b == 0 and a == c:
                total += Fraction(1, 2)
            else:
                total += 1
        a += 1
    return total


def pell_search(d0: int) -> tuple[int, int]:
    """Smallest t, u > 0 with t^2 - d0 u^2 = 4, by ascending u."""
    u = 1
    while True:
        t2 = d0 * u * u + 4
        t = math.isqrt(t2)
        if t * t == t2:
            return t, u
        u += 1


def _reduced_indefinite_cycles(d: int) -> int:
    """Number of SL_2(Z) classes of forms of discriminant d > 0 nonsquare,
    counted by the orbits of reduced forms under the Gauss step."""
    root = math.sqrt(d)
    reduced = set()
    for b in range(1, math.isqrt(d) + 1):
        if (d - b * b) % 4:
            continue
        ac = (b * b - d) // 4
        for a in range(1, abs(ac) + 1):
            if ac % a:
                continue
            for sa in (a, -a):
                c = ac // sa
                if 0 < b < root and root - b < 2 * abs(sa) < root + b:
                    reduced.add((sa, b, c))
    seen, cycles = set(), 0
    for q in sorted(reduced):
        if q in seen:
            continue
        cycles += 1
        cur = q
        while cur not in seen:
            seen.add(cur)
            a, b, c = cur
            # rho step: (a, b, c) -> (c, b', ...), b' = -b mod 2c in the reduced window
            m = 2 * abs(c)
            bp = -b % m
            while not (root - m < bp < root):
                bp += m if bp <= root - m else -m
            cur = (c, bp, (bp * bp - d) // (4 * c))
    return cycles


def pell_closed_form(d: int) -> float:
    """tr_d(1) = (number of classes) * 2 log eps / (2 pi sqrt d), eps from
    t^2 - d u^2 = 4. Valid when every class of discriminant d is primitive
    (true for 5, 8, 12, 13 and the other d used in the tests)."""
    t, u = pell_search(d)
    eps = (t + u * math.sqrt(d)) / 2
    return _reduced_indefinite_cycles(d) * 2 * math.log(eps) / (2 * math.pi * math.sqrt(d))
