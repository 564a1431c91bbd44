"""Exact q-expansions of weakly holomorphic modular functions and their evaluation.

Built-in inputs are the level one functions j and the basis j_m of M_0^!;
anything else is read from a JSON file (see :func:`load_input`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from modtrace.errors import DomainError, PrecisionError
from modtrace.quadforms import GAMMA1, Group, reduce_point_group, reduce_points

DEFAULT_NMAX = 64

Number = int | Fraction


def _as_exact(x) -> Number:
    if isinstance(x, (int, Fraction)):
        return x
    if isinstance(x, str):
        v = Fraction(x.strip())
        return v.numerator if v.denominator == 1 else v
    raise TypeError(f"expansion coefficients must be exact, got {x!r}")


@dataclass(frozen=True)
class QExpansion:
    """Truncated expansion sum_{n = n_min}^{n_max} a(n) q^n with exact coefficients."""

    n_min: int
    coeffs: tuple[Number, ...]
    width: int = 1

    @classmethod
    def from_dict(cls, d: Mapping[int, Number], n_max: int | None = None, width: int = 1) -> "QExpansion":
        keys = [int(k) for k in d]
        lo = min(keys + [0])
        hi = max(keys + [0]) if n_max is None else n_max
        return cls(lo, tuple(_as_exact(d.get(n, 0)) for n in range(lo, hi + 1)), width)

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Number:
        if n > self.n_max:
            raise IndexError(f"coefficient q^{n} beyond truncation q^{self.n_max}")
        if n < self.n_min:
            return 0
        return self.coeffs[n - self.n_min]

    def items(self) -> Iterable[tuple[int, Number]]:
        for i, c in enumerate(self.coeffs):
            if c:
                yield self.n_min + i, c

    @property
    def order(self) -> int:
        """Pole order m of the principal part (0 when holomorphic at the cusp)."""
        for n, c in self.items():
            return max(0, -n)
        return 0

    def principal_part(self) -> dict[int, Number]:
        return {n: c for n, c in self.items() if n < 0}

    def truncate(self, n_max: int) -> "QExpansion":
        if n_max > self.n_max:
            raise IndexError("cannot extend a truncated expansion")
        return QExpansion(self.n_min, self.coeffs[: n_max - self.n_min + 1], self.width)

    def _binary(self, other: "QExpansion", sign: int) -> "QExpansion":
        lo = min(self.n_min, other.n_min)
        hi = min(self.n_max, other.n_max)
        return QExpansion(lo, tuple(self[n] + sign * other[n] for n in range(lo, hi + 1)), self.width)

    def __add__(self, other):
        if isinstance(other, QExpansion):
            return self._binary(other, 1)
        return self + constant(other, self.n_max)

    def __sub__(self, other):
        if isinstance(other, QExpansion):
            return self._binary(other, -1)
        return self - constant(other, self.n_max)

    def __mul__(self, other):
        if not isinstance(other, QExpansion):
            return QExpansion(self.n_min, tuple(c * other for c in self.coeffs), self.width)
        lo = self.n_min + other.n_min
        hi = min(self.n_max + other.n_min, other.n_max + self.n_min)
        out = [0] * (hi - lo + 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                k = i + j
                if k > hi - lo:
                    break
                out[k] += a * b
        return QExpansion(lo, tuple(out), self.width)

    __rmul__ = __mul__

    def to_json(self) -> dict[str, str]:
        return {str(n): str(c) for n, c in self.items()}


def constant(c: Number, n_max: int) -> QExpansion:
    return QExpansion(0, (c,) + (0,) * n_max)


# ------------------------------------------------------------- level one data

def _sigma(n: int, k: int) -> int:
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


def _series_inverse(a: list[int], n: int) -> list[int]:
    """Inverse of a power series with a[0] = 1, exact to q^n."""
    inv = [0] * (n + 1)
    inv[0] = 1
    for k in range(1, n + 1):
        inv[k] = -sum(a[i] * inv[k - i] for i in range(1, min(k, len(a) - 1) + 1))
    return inv


@lru_cache(maxsize=None)
def _j_coeffs(n_max: int) -> tuple[int, ...]:
    # j = E4^3 / (q prod (1-q^n)^24); we need E4^3 / prod through q^{n_max+1}
    n = n_max + 1
    e4 = [1] + [240 * _sigma(k, 3) for k in range(1, n + 1)]
    e4_sq = [sum(e4[i] * e4[k - i] for i in range(k + 1)) for k in range(n + 1)]
    e4_cu = [sum(e4_sq[i] * e4[k - i] for i in range(k + 1)) for k in range(n + 1)]
    prod = [1] + [0] * n
    for m in range(1, n + 1):
        # multiply by (1 - q^m)^24 one factor at a time
        for _ in range(24):
            for k in range(n, m - 1, -1):
                prod[k] -= prod[k - m]
    inv = _series_inverse(prod, n)
    return tuple(sum(e4_cu[i] * inv[k - i] for i in range(k + 1)) for k in range(n + 1))


def j_expansion(n_max: int = DEFAULT_NMAX) -> QExpansion:
    """Exact coefficients of j = q^{-1} + 744 + 196884 q + ... through q^{n_max}."""
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    return QExpansion(-1, _j_coeffs(n_max))


@lru_cache(maxsize=None)
def jm_expansion(m: int, n_max: int = DEFAULT_NMAX) -> QExpansion:
    """j_m = q^{-m} + O(q): j_0 = 1, j_1 = j - 744, j_m a monic polynomial in j."""
    if m < 0:
        raise DomainError("m must be nonnegative")
    if m == 0:
        return constant(1, n_max)
    j = j_expansion(n_max + m - 1)
    powers = [constant(1, n_max + m - 1), j]
    for _ in range(2, m + 1):
        powers.append(powers[-1] * j)
    f = powers[m]
    for k in range(m - 1, 0, -1):
        f = f - powers[k] * f[-k]
    f = f - f[0]
    return f.truncate(n_max)


jm_basis = jm_expansion


# ----------------------------------------------------------------- inputs

@dataclass(frozen=True)
class CuspInput:
    label: str
    alpha: int
    beta: Fraction
    k: Fraction
    aplus: QExpansion
    aminus: tuple[tuple[int, Number], ...] = ()


@dataclass(frozen=True)
class ModularFunctionInput:
    """A function in H_0^+ for Gamma(1) or Gamma_0^*(p), given at the cusp infinity.

    ``aminus`` lists coefficients of the non-holomorphic part
    sum_{n<0} a^-(n) e(n conj(z)); it is empty for weakly holomorphic inputs.
    """

    name: str
    group: Group
    aplus: QExpansion
    aminus: tuple[tuple[int, Number], ...] = ()
    growth_rigorous: bool = False
    extra_cusps: tuple[CuspInput, ...] = field(default=())

    def __post_init__(self):
        if any(n >= 0 for n, _ in self.aminus):
            raise DomainError("a^- coefficients exist for negative indices only")

    def a(self, n: int) -> Number:
        return self.aplus[n]

    @property
    def constant_term(self) -> Number:
        return self.aplus[0]

    @property
    def order(self) -> int:
        return self.aplus.order

    @property
    def is_holomorphic(self) -> bool:
        return not self.aminus

    def scaled(self, c: Number) -> "ModularFunctionInput":
        return ModularFunctionInput(f"{c}*{self.name}", self.group, self.aplus * c,
                                    tuple((n, a * c) for n, a in self.aminus),
                                    self.growth_rigorous)

    def with_nmax(self, n_max: int) -> "ModularFunctionInput":
        if self.name.startswith("j") and self.group.p == 1 and self.is_holomorphic:
            return builtin(self.name, n_max)
        return ModularFunctionInput(self.name, self.group, self.aplus.truncate(n_max), self.aminus,
                                    self.growth_rigorous)


def builtin(name: str, n_max: int = DEFAULT_NMAX) -> ModularFunctionInput:
    """Level one inputs: ``j``, ``j1``, ``jm:<m>`` (``jm:0`` is the constant 1), ``const``."""
    key = name.strip().lower()
    if key == "j":
        return ModularFunctionInput("j", GAMMA1, j_expansion(n_max), (), True)
    if key in ("const", "1", "jm:0", "j0"):
        return ModularFunctionInput("j0", GAMMA1, jm_expansion(0, n_max), (), True)
    if key == "j1":
        return ModularFunctionInput("j1", GAMMA1, jm_expansion(1, n_max), (), True)
    if key.startswith("jm:") or (key.startswith("j") and key[1:].isdigit()):
        m = int(key.split(":", 1)[1]) if ":" in key else int(key[1:])
        return ModularFunctionInput(f"j{m}", GAMMA1, jm_expansion(m, n_max), (), True)
    raise DomainError(f"unknown built-in function {name!r}")


def load_input(path: str | Path) -> ModularFunctionInput:
    """Read the JSON input format::

        {"group": "gamma1" | "gamma0star:p",
         "cusps": [{"label": "inf", "alpha": "1", "beta": "1", "k": "0",
                    "aplus": {"-1": "1", "1": "196884", ...}, "aminus": {}}]}

    Coefficients are exact integers or rationals written as strings. The
    first cusp must be infinity (width 1); further cusps are kept but unused
    because both supported groups have a single cusp class.
    """
    doc = json.loads(Path(path).read_text())
    return parse_input(doc, name=Path(path).stem)


def parse_input(doc: Mapping, name: str = "input") -> ModularFunctionInput:
    try:
        group = Group.parse(doc["group"])
        cusps = []
        for c in doc["cusps"]:
            aplus = QExpansion.from_dict({int(k): _as_exact(v) for k, v in c["aplus"].items()},
                                         width=int(c.get("alpha", 1)))
            aminus = tuple(sorted((int(k), _as_exact(v)) for k, v in c.get("aminus", {}).items()))
            cusps.append(CuspInput(str(c.get("label", "inf")), int(c.get("alpha", 1)),
                                   Fraction(str(c.get("beta", "1"))), Fraction(str(c.get("k", "0"))),
                                   aplus, aminus))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed input document: {exc}") from exc
    if not cusps:
        raise DomainError("input needs at least one cusp")
    first = cusps[0]
    if first.alpha != 1:
        raise DomainError("the cusp at infinity has width 1 for the supported groups")
    return ModularFunctionInput(name, group, first.aplus, first.aminus, False, tuple(cusps[1:]))


# --------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class Evaluation:
    value: complex
    bound: float


def log_coefficient_envelope(f: ModularFunctionInput):
    """Function n -> log of an upper bound for |a(n)| beyond the truncation.

    For built-in inputs this is the standard e^{4 pi sqrt(m n)} growth with a
    safe constant; for user input the constant is fitted to the last stored
    coefficients and inflated tenfold.
    """
    m = max(1, f.order)
    exp_rate = 4 * math.pi * math.sqrt(m)
    top = f.aplus.n_max
    lo = max(1, top - 9)
    fit = 0.0
    for n in range(lo, top + 1):
        c = abs(float(f.aplus[n]))
        if c:
            fit = max(fit, math.log(c) - exp_rate * math.sqrt(n) + 0.75 * math.log(n))
    safety = math.log(2.0) if f.growth_rigorous else math.log(10.0)
    if f.order == 0:
        return None if f.growth_rigorous else (lambda n: fit + safety)

    def log_env(n: int) -> float:
        return fit + safety + exp_rate * math.sqrt(n) - 0.75 * math.log(n)

    return log_env


def coefficient_envelope(f: ModularFunctionInput):
    """Function n -> upper bound for |a(n)| beyond the truncation, or None."""
    log_env = log_coefficient_envelope(f)
    if log_env is None:
        return None
    return lambda n: math.exp(min(log_env(n), 709.0))


def tail_bound(f: ModularFunctionInput, qabs: float) -> float:
    """Upper bound for sum_{n > n_max} |a(n)| |q|^n."""
    log_env = log_coefficient_envelope(f)
    if log_env is None or qabs == 0.0:
        return 0.0
    total = 0.0
    n = f.aplus.n_max + 1
    logq = math.log(qabs)
    while True:
        lt = log_env(n) + n * logq
        term = math.exp(lt) if lt > -745 else 0.0
        total += term
        if term <= 1e-18 * total or lt < -745 or n > f.aplus.n_max + 100000:
            if lt + logq * 1 > 0:
                return math.inf
            return total * 1.01
        n += 1


@lru_cache(maxsize=256)
def _float_coeffs(aplus: QExpansion) -> np.ndarray:
    return np.array([float(c) for c in aplus.coeffs], dtype=float)


def _series(f: ModularFunctionInput, z0: np.ndarray) -> np.ndarray:
    q = np.exp(2j * np.pi * z0)
    coeffs = _float_coeffs(f.aplus)
    acc = np.zeros_like(q)
    for c in coeffs[::-1]:
        acc = acc * q + c
    out = acc * q ** f.aplus.n_min if f.aplus.n_min else acc
    for n, a in f.aminus:
        out = out + float(a) * np.exp(2j * np.pi * n * np.conj(z0))
    return out


def reduce_for(f: ModularFunctionInput, z: np.ndarray) -> np.ndarray:
    if f.group.p == 1:
        return reduce_points(z)
    flat = np.ravel(z)
    out = np.array([reduce_point_group(complex(w), f.group)[0] for w in flat])
    return out.reshape(np.shape(z))


def evaluate_many(f: ModularFunctionInput, z, tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Values of f at an array of points and a common absolute error bound."""
    z = np.asarray(z, dtype=complex)
    z0 = reduce_for(f, z)
    values = _series(f, z0)
    ymin = float(np.min(z0.imag)) if z0.size else 1.0
    bound = tail_bound(f, math.exp(-2 * math.pi * ymin))
    if bound > tol * max(1.0, float(np.max(np.abs(values), initial=0.0))):
        raise PrecisionError(f"tail bound {bound:.3e} exceeds tolerance at height {ymin:.3f}; "
                             f"raise n_max (now {f.aplus.n_max})")
    return values, bound


def evaluate(f: ModularFunctionInput, z: complex, tol: float = 1e-10) -> Evaluation:
    """f(z) via reduction to a fundamental set and the q-expansion, with a tail bound."""
    if not complex(z).imag > 0:
        raise DomainError("z must lie in the upper half plane")
    values, bound = evaluate_many(f, np.array([complex(z)]), tol)
    return Evaluation(complex(values[0]), bound)
