"""Residual check suites shared by the CLI and the test suite.

Every check returns a :class:`Check` holding the worst residual over its
samples and the tolerance it is held to. Sampling uses a seeded
``random.Random`` so reports are reproducible.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from modtrace import genseries as gs
from modtrace import thetakernel as tk
from modtrace.errors import DomainError
from modtrace.qseries import builtin, evaluate_many
from modtrace.quadforms import Mat
from modtrace.traces import LatticeContext

SUITES = ("kernel", "xi", "laplacian", "current")


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_json(self) -> dict:
        return {"name": self.name, "residual": repr(self.residual), "tolerance": repr(self.tolerance),
                "samples": self.samples, "passed": self.passed}


def random_vector(rng: random.Random, bound: int = 3) -> tk.VectorV:
    """Nonzero, non-isotropic X with half-integral entries of size <= bound."""
    while True:
        X = tk.VectorV(*(Fraction(rng.randint(-2 * bound, 2 * bound), 2) for _ in range(3)))
        if not X.is_zero and X.Q != 0:
            return X


def random_point(rng: random.Random, vlo: float = 0.5, vhi: float = 2.0) -> complex:
    return complex(rng.uniform(-1.0, 1.0), rng.uniform(vlo, vhi))


def random_sl2(rng: random.Random, bound: int = 3) -> Mat:
    while True:
        a, b, c = (rng.randint(-bound, bound) for _ in range(3))
        if a == 0:
            continue
        if (1 + b * c) % a == 0:
            return Mat(a, b, c, (1 + b * c) // a)


def _kernel_samples(rng: random.Random, n: int, min_R: float = 0.5, eta_ok: bool = False):
    out = []
    while len(out) < n:
        X, tau, z = random_vector(rng), random_point(rng), random_point(rng)
        md = tk.majorant_data(X, z)
        if md.R < min_R:
            continue
        if eta_ok and X.Q > 0 and abs(md.pairing) < 1e-2:
            continue  # too close to c_X for one-sided differencing
        out.append((X, tau, z))
    return out


def kernel_suite(seed: int = 0, n: int = 50, n_eta: int = 20) -> list[Check]:
    rng = random.Random(seed)
    pts = _kernel_samples(rng, n)
    eta_pts = _kernel_samples(rng, n_eta, eta_ok=True)
    checks = [
        Check("laplace_commutation", max(tk.laplace_commutation_check(*p) for p in pts), 1e-4, n),
        Check("phi1_lowering", max(tk.phi1_check(*p) for p in eta_pts), 1e-6, n_eta),
        Check("ddc_eta", max(tk.ddc_eta_check(*p) for p in eta_pts), 1e-4, n_eta),
        Check("lowering_eta", max(tk.lowering_eta_check(*p) for p in eta_pts), 1e-5, n_eta),
        Check("partial_eta", max(tk.partial_eta_check(*p) for p in eta_pts), 1e-5, n_eta),
    ]
    worst = 0.0
    for _ in range(30):
        X, tau, z = random_vector(rng), random_point(rng), random_point(rng)
        g = random_sl2(rng)
        gz = (g.a * z + g.b) / (g.c * z + g.d)
        Xg = X.act(Mat(g.d, -g.b, -g.c, g.a))
        for fn in (tk.phi0, tk.phi1, tk.xi_kudla):
            a, b = fn(Xg, tau, z), fn(X, tau, gz)
            worst = max(worst, abs(a - b) / (abs(b) + 1e-300))
    checks.append(Check("equivariance", worst, 1e-10, 30))
    return checks


def xi_suite(seed: int = 0, n: int = 20) -> list[Check]:
    rng = random.Random(seed)
    S = gs.assemble(builtin("j1"), d_max=7)
    xi = gs.xi_apply(S)
    coeffs = {3: 496, 4: -984, 7: 8238}
    err = max(abs(xi.coefficient(k, "holo") - c) for k, c in coeffs.items())
    checks = [Check("xi_j1_coefficients", err, 1e-6, len(coeffs))]
    # one term of each profile, taken from series where it occurs
    const = gs.assemble(builtin("const"), d_max=9)
    samples = [t for t in S.terms if t.profile != "holo"]
    samples += [t for t in const.terms if t.profile in ("calF", "logv")]
    for profile in sorted({t.profile for t in samples}):
        terms = [t for t in samples if t.profile == profile]
        worst = 0.0
        for _ in range(n):
            t = terms[rng.randrange(len(terms))]
            tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 3.0))
            target = gs.xi_term(t).value(tau)
            num = gs.xi_numeric(t.value, tau, gs.fd_step(t.index))
            worst = max(worst, abs(num - target) / abs(target))
        checks.append(Check(f"xi_profile_{profile}", worst, 1e-5, n))
    return checks


def laplacian_suite() -> list[Check]:
    ctx = LatticeContext(convention="lattice")
    j1 = gs.assemble(builtin("j1"), ctx=ctx, d_max=16)
    one = gs.assemble(builtin("const"), ctx=ctx, d_max=16)
    rj = gs.laplacian_check(j1, 0, (1j, 1 + 2j))
    r1 = gs.laplacian_check(one, 1, (2j, 1 + 2j))
    return [Check("laplacian_j1", max(r.residual for r in rj), 1e-4, len(rj)),
            Check("laplacian_const", max(r.residual for r in r1), 1e-3, len(r1))]


def current_suite() -> list[Check]:
    def one(z):
        return np.ones_like(z)

    X = tk.VectorV(0, 1, -1)
    c1 = tk.current_integral_elliptic(one, X, 1j)
    c2 = tk.current_integral_elliptic(one, X, 2j)
    ratio = (abs(c1.numeric) / abs(c2.numeric)) / (abs(c1.closed_form) / abs(c2.closed_form))
    j1 = builtin("j1")
    cj = tk.current_integral_elliptic(lambda z: evaluate_many(j1, z, 1e-8)[0], X, 1j)
    return [Check("current_const_modulus", c1.modulus_residual, 1e-4, 1),
            Check("current_v_scaling", abs(ratio - 1), 1e-4, 2),
            Check("current_j1", cj.residual, 1e-3, 1)]


def run(suite: str, seed: int = 0) -> list[Check]:
    if suite == "all":
        return [c for s in SUITES for c in run(s, seed)]
    if suite == "kernel":
        return kernel_suite(seed)
    if suite == "xi":
        return xi_suite(seed)
    if suite == "laplacian":
        return laplacian_suite()
    if suite == "current":
        return current_suite()
    raise DomainError(f"unknown suite {suite!r}")


def eta_singularities(tau: complex = 1j) -> list[Check]:
    """Continuity of eta across c_X with a jump in its derivative, and the
    log coefficient at D_X."""
    # c_X for (1, 1; 1, -1) is the circle |z - 1| = sqrt 2; no mirror symmetry
    X = tk.VectorV(1, 1, 1)
    normal = cmath.exp(1j * math.pi / 3)
    ea, eb, pa, pb = tk.eta_jump_check(X, tau, 1 + math.sqrt(2) * normal, normal)
    scale = abs(ea) + abs(eb)
    slope, pred = tk.eta_log_slope(tk.VectorV(0, 1, -1), tau)
    return [Check("eta_continuity", abs(ea - eb) / scale, 1e-3, 1),
            # partial_eta carries sgn((X, X(z))): opposite values on the two sides
            Check("eta_derivative_jump", abs(pa + pb) / (abs(pa) + abs(pb)), 1e-3, 1),
            Check("eta_log_slope", abs(slope / pred - 1), 2e-2, 4)]

