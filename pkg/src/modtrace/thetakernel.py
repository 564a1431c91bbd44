"""Pointwise theta kernels on trace zero matrices and their Green functions.

Vectors are X = (x1, x2; x3, -x1) with Q(X) = -N det X and (X, Y) = N tr(XY),
so (X, X) = 2 Q(X). The point z in the upper half plane corresponds to the
negative line spanned by

    X(z) = (1 / (sqrt(N) y)) (-x, z zbar; -1, x).

All kernels take tau = u + iv and z = x + iy as Python complex numbers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special as sp

from modtrace.errors import DomainError
from modtrace.quadforms import Mat
from modtrace.quadrature import adaptive, legendre_rule
from modtrace.specialfn import e1


@dataclass(frozen=True)
class VectorV:
    x1: Fraction
    x2: Fraction
    x3: Fraction
    N: int = 1

    def __post_init__(self):
        for name in ("x1", "x2", "x3"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.N < 1:
            raise DomainError("level must be positive")

    @classmethod
    def from_form(cls, a: int, b: int, c: int) -> "VectorV":
        """The vector (b, 2c; -2a, -b) attached to [a, b, c]; Q = b^2 - 4ac at N = 1."""
        return cls(b, 2 * c, -2 * a, 1)

    @property
    def Q(self) -> Fraction:
        return self.N * (self.x1 * self.x1 + self.x2 * self.x3)

    @property
    def is_zero(self) -> bool:
        return self.x1 == 0 and self.x2 == 0 and self.x3 == 0

    def floats(self) -> tuple[float, float, float]:
        return float(self.x1), float(self.x2), float(self.x3)

    def act(self, g: Mat) -> "VectorV":
        """g.X = g X g^{-1} for g in SL_2(Z)."""
        a, b, c, d = g.a, g.b, g.c, g.d
        if a * d - b * c != 1:
            raise DomainError("act needs determinant one")
        x1, x2, x3 = self.x1, self.x2, self.x3
        # g X g^{-1} with g^{-1} = (d, -b; -c, a)
        m11 = a * x1 + b * x3
        m12 = a * x2 - b * x1
        m21 = c * x1 + d * x3
        m22 = c * x2 - d * x1
        n11 = m11 * d - m12 * c
        n12 = -m11 * b + m12 * a
        n21 = m21 * d - m22 * c
        return VectorV(n11, n12, n21, self.N)

    def cm_point(self) -> complex:
        """D_X for Q(X) < 0: the point where R(X, z) = 0."""
        if self.Q >= 0:
            raise DomainError("D_X exists only for negative length")
        x1, x2, x3 = self.floats()
        # x3 |z|^2 - 2 x1 x - x2 is the pairing numerator; D_X is its critical zero
        xr = x1 / x3
        y2 = -float(self.Q) / (self.N * x3 * x3)
        return complex(xr, math.sqrt(y2))


def _check(X: VectorV, tau: complex | None, z: complex) -> None:
    if X.is_zero:
        raise DomainError("kernels are defined for X != 0")
    if not z.imag > 0:
        raise DomainError("z must lie in the upper half plane")
    if tau is not None and not tau.imag > 0:
        raise DomainError("tau must lie in the upper half plane")


def pairing(X: VectorV, z: complex) -> float:
    """(X, X(z)) = (sqrt(N) / y) (x3 |z|^2 - 2 x1 x - x2)."""
    x1, x2, x3 = X.floats()
    x, y = z.real, z.imag
    return math.sqrt(X.N) / y * (x3 * (x * x + y * y) - 2 * x1 * x - x2)


def pairing_derivative(X: VectorV, z: complex) -> complex:
    """(X, dX(z)/dz) = (i / 2y) (X, X(z)) + (sqrt(N)/y) (x3 zbar - x1)."""
    x1, _, x3 = X.floats()
    y = z.imag
    return 0.5j / y * pairing(X, z) + math.sqrt(X.N) / y * (x3 * z.conjugate() - x1)


@dataclass(frozen=True)
class Majorant:
    pairing: float
    R: float
    majorant: float


def majorant_data(X: VectorV, z: complex) -> Majorant:
    """((X, X(z)), R(X, z), (X, X)_z) with R = (X,X) + p^2/2 and (X,X)_z = (X,X) + p^2."""
    z = complex(z)
    _check(X, None, z)
    p = pairing(X, z)
    xx = 2 * float(X.Q)
    R = xx + 0.5 * p * p
    return Majorant(p, max(R, 0.0), xx + p * p)


def phi0(X: VectorV, tau: complex, z: complex) -> complex:
    """sqrt(v) exp(pi i ((X,X) u + i v (X,X)_z))."""
    tau, z = complex(tau), complex(z)
    _check(X, tau, z)
    u, v = tau.real, tau.imag
    md = majorant_data(X, z)
    xx = 2 * float(X.Q)
    return math.sqrt(v) * cmath.exp(1j * math.pi * xx * u - math.pi * v * md.majorant)


def phi1(X: VectorV, tau: complex, z: complex) -> complex:
    """-(1/pi) L_{1/2} phi0 = (v^2 p^2 - v / 2 pi) phi0 with p = (X, X(z))."""
    tau, z = complex(tau), complex(z)
    v = tau.imag
    p = pairing(X, z)
    return (v * v * p * p - v / (2 * math.pi)) * phi0(X, tau, z)


def xi_kudla(X: VectorV, tau: complex, z: complex) -> complex:
    """v^{3/2} E_1(2 pi v R) e(Q tau-bar)."""
    tau, z = complex(tau), complex(z)
    _check(X, tau, z)
    v = tau.imag
    R = majorant_data(X, z).R
    if R <= 0:
        raise DomainError("xi is singular at D_X (R = 0)")
    return v ** 1.5 * e1(2 * math.pi * v * R) * cmath.exp(2j * math.pi * float(X.Q) * tau.conjugate())


def _eta_radial(lam0: float, rate: float, v: float, tol: float) -> float:
    """int_0^oo sqrt(pi/lam) erfc(sqrt(lam v)) 2w/(1+w^2) dw, lam = lam0 + rate w^2.

    This is int_1^oo sqrt(pi/lam(s)) erfc(sqrt(lam(s) v)) ds/s after s = 1 + w^2,
    i.e. the t-integral of E_1(2 pi R t) e^{4 pi Q t} t^{-1/2} over [v, oo)
    done in closed form under the E_1 integral.
    """
    # erfc = erfcx e^{-x^2}; pulling out e^{-lam0 v} keeps the tolerance relative
    def g(w):
        lam = lam0 + rate * w * w
        return (np.sqrt(np.pi / lam) * sp.erfcx(np.sqrt(lam * v)) * np.exp(-rate * w * w * v)
                * 2 * w / (1 + w * w))

    # the scaled integrand is below e^{-46} of its peak once rate w^2 v > 46
    W = math.sqrt(46.0 / (rate * v)) + 1.0
    scale = 1.0 / math.sqrt(rate * v)
    breaks = [min(W, k * scale) for k in (0.05, 0.25, 1.0, 3.0)]
    res = adaptive(g, 0.0, W, tol=tol, order=16, breakpoints=breaks)
    return float(res.value) * math.exp(-lam0 * v)


def eta(X: VectorV, tau: complex, z: complex, tol: float = 1e-13) -> complex:
    """pi (int_v^oo E_1(2 pi R t) e^{2 pi (X,X) t} dt / sqrt t) e(Q tau)."""
    tau, z = complex(tau), complex(z)
    _check(X, tau, z)
    v = tau.imag
    md = majorant_data(X, z)
    Q = float(X.Q)
    if md.R <= 0:
        raise DomainError("eta has a logarithmic singularity at D_X (R = 0)")
    lam0 = 2 * math.pi * (md.R - 2 * Q)  # = pi p^2 >= 0, plus 4 pi |Q| when Q < 0
    rate = 2 * math.pi * md.R
    if lam0 <= 0 and Q >= 0:
        lam0 = 0.0
    val = _eta_radial(max(lam0, 0.0), rate, v, tol)
    return math.pi * val * cmath.exp(2j * math.pi * Q * tau)


def partial_eta(X: VectorV, tau: complex, z: complex) -> complex:
    """dz-component of d eta: -pi sgn(p) (X, X'(z)) / R erfc(sqrt(pi v) |p|) e(Q tau)."""
    tau, z = complex(tau), complex(z)
    _check(X, tau, z)
    md = majorant_data(X, z)
    p = md.pairing
    if md.R <= 0:
        raise DomainError("partial_eta is singular at D_X")
    if X.Q > 0 and p == 0:
        raise DomainError("partial_eta jumps across the geodesic c_X ((X, X(z)) = 0)")
    sgn = 1.0 if p > 0 else (-1.0 if p < 0 else 0.0)
    v = tau.imag
    return (-math.pi * sgn * pairing_derivative(X, z) / md.R * math.erfc(math.sqrt(math.pi * v) * abs(p))
            * cmath.exp(2j * math.pi * float(X.Q) * tau))


def partial_eta_diagonal(m: float, tau: complex, z: complex) -> complex:
    """Closed form for X = sqrt(m) diag(1, -1) at N = 1:
    -sgn(x) (pi i / 2 sqrt m) erfc(2 sqrt(pi v m) |x| / y) e(m tau) / z."""
    x, y = z.real, z.imag
    sgn = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
    v = tau.imag
    return (-sgn * math.pi * 1j / (2 * math.sqrt(m)) * math.erfc(2 * math.sqrt(math.pi * v * m) * abs(x) / y)
            * cmath.exp(2j * math.pi * m * tau) / z)


# ------------------------------------------------------------ finite differences

def _d1(g, h: float):
    return (g(3 * h) - 9 * g(2 * h) + 45 * g(h) - 45 * g(-h) + 9 * g(-2 * h) - g(-3 * h)) / (60 * h)


def _d2(g, h: float):
    return (2 * g(3 * h) - 27 * g(2 * h) + 270 * g(h) - 490 * g(0.0) + 270 * g(-h)
            - 27 * g(-2 * h) + 2 * g(-3 * h)) / (180 * h * h)


def laplacian_tau(func, tau: complex, k: float = 0.5, h: float = 1e-3) -> complex:
    """Delta_k = -v^2 (d_u^2 + d_v^2) + i k v (d_u + i d_v)."""
    v = tau.imag
    duu = _d2(lambda s: func(tau + s), h)
    dvv = _d2(lambda s: func(tau + 1j * s), h)
    du = _d1(lambda s: func(tau + s), h)
    dv = _d1(lambda s: func(tau + 1j * s), h)
    return -v * v * (duu + dvv) + 1j * k * v * (du + 1j * dv)


def laplacian_z(func, z: complex, h: float = 1e-3) -> complex:
    """Delta_z = -y^2 (d_x^2 + d_y^2)."""
    y = z.imag
    return -y * y * (_d2(lambda s: func(z + s), h) + _d2(lambda s: func(z + 1j * s), h))


def lowering(func, tau: complex, h: float = 1e-3) -> complex:
    """L = -2 i v^2 d/d tau-bar."""
    du = _d1(lambda s: func(tau + s), h)
    dv = _d1(lambda s: func(tau + 1j * s), h)
    return -2j * tau.imag ** 2 * 0.5 * (du + 1j * dv)


def d_dz(func, z: complex, h: float = 1e-4) -> complex:
    du = _d1(lambda s: func(z + s), h)
    dv = _d1(lambda s: func(z + 1j * s), h)
    return 0.5 * (du - 1j * dv)


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / (abs(b) + 1e-30)


def laplace_commutation_check(X: VectorV, tau: complex, z: complex, h: float = 1e-3) -> float:
    """Relative residual of Delta_tau phi0 = (1/4) Delta_z phi0."""
    tau, z = complex(tau), complex(z)
    lhs = laplacian_tau(lambda t: phi0(X, t, z), tau, 0.5, h)
    rhs = 0.25 * laplacian_z(lambda w: phi0(X, tau, w), z, h)
    return abs(lhs - rhs) / (abs(lhs) + 1e-30)


def phi1_check(X: VectorV, tau: complex, z: complex, h: float = 1e-3) -> float:
    num = -lowering(lambda t: phi0(X, t, z), complex(tau), h) / math.pi
    return _relative(num, phi1(X, tau, z))


def ddc_eta_check(X: VectorV, tau: complex, z: complex, h: float = 1e-3) -> float:
    """Relative residual of -(1/4 pi) Delta_z eta = phi0."""
    tau, z = complex(tau), complex(z)
    lhs = -laplacian_z(lambda w: eta(X, tau, w), z, h) / (4 * math.pi)
    return _relative(lhs, phi0(X, tau, z))


def lowering_eta_check(X: VectorV, tau: complex, z: complex, h: float = 1e-3) -> float:
    """Relative residual of L_{1/2} eta = -pi xi."""
    tau, z = complex(tau), complex(z)
    lhs = lowering(lambda t: eta(X, t, z), tau, h)
    return _relative(lhs, -math.pi * xi_kudla(X, tau, z))


def partial_eta_check(X: VectorV, tau: complex, z: complex, h: float = 1e-4) -> float:
    tau, z = complex(tau), complex(z)
    return _relative(d_dz(lambda w: eta(X, tau, w), z, h), partial_eta(X, tau, z))


# ---------------------------------------------------------- current integrals

@dataclass(frozen=True)
class CurrentIntegral:
    numeric: complex
    closed_form: complex
    error: float

    @property
    def modulus_residual(self) -> float:
        return abs(abs(self.numeric) - abs(self.closed_form)) / abs(self.closed_form)

    @property
    def residual(self) -> float:
        return abs(self.numeric - self.closed_form) / abs(self.closed_form)


def _frame_to(point: complex) -> np.ndarray:
    """Real matrix g with g i = point."""
    x, y = point.real, point.imag
    s = math.sqrt(y)
    return np.array([[s, x / s], [0.0, 1.0 / s]])


def current_closed_form(X: VectorV, tau: complex, fD: complex) -> complex:
    """(pi / 2 sqrt|m|) erfc(2 sqrt(pi |m| v)) e(m tau) f(D_X)."""
    m = float(X.Q)
    v = tau.imag
    return (math.pi / (2 * math.sqrt(-m)) * math.erfc(2 * math.sqrt(math.pi * -m * v))
            * cmath.exp(2j * math.pi * m * tau) * fD)


def current_integral_elliptic(f, X: VectorV, tau: complex, r_max: float | None = None,
                              panels: int = 24, order: int = 20, n_angle: int = 64) -> CurrentIntegral:
    """int_D f(z) phi0(X, tau, z) dmu(z) in geodesic polar coordinates around D_X.

    ``f`` maps a numpy array of points to values (vectorized). The angular
    rule is the trapezoid rule (periodic integrand); the radial rule is
    composite Gauss-Legendre out to where the Gaussian factor is negligible.
    The error estimate compares against half the angular and radial nodes.
    """
    tau = complex(tau)
    m = float(X.Q)
    if m >= 0:
        raise DomainError("the elliptic current needs Q(X) < 0")
    v = tau.imag
    D = X.cm_point()
    g = _frame_to(D)
    # phi0 = sqrt(v) e^{2 pi i m u} e^{-2 pi |m| v} e^{-2 pi v R}, R = 2|m| sinh^2 r
    if r_max is None:
        r_max = math.asinh(math.sqrt(60.0 / (4 * math.pi * -m * v)))
    scale = math.sqrt(v) * cmath.exp(2j * math.pi * m * tau.real) * math.exp(-2 * math.pi * -m * v)

    def run(n_ang, n_pan):
        x, w = legendre_rule(order)
        edges = np.linspace(0.0, r_max, n_pan + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wr = (half[:, None] * w[None, :]).ravel()
        theta = np.pi * np.arange(n_ang) / n_ang  # rotation angle; tangent direction 2 theta
        ct, st = np.cos(theta), np.sin(theta)
        w0 = 1j * np.exp(r)
        # k_theta = (cos, sin; -sin, cos), then g
        W = (ct[None, :] * w0[:, None] + st[None, :]) / (-st[None, :] * w0[:, None] + ct[None, :])
        Z = (g[0, 0] * W + g[0, 1]) / (g[1, 0] * W + g[1, 1])
        vals = np.asarray(f(Z.ravel())).reshape(Z.shape)
        radial = np.exp(-2 * math.pi * v * 2 * -m * np.sinh(r) ** 2) * np.sinh(r)
        inner = vals.mean(axis=1) * 2 * math.pi
        return scale * np.sum(wr * radial * inner)

    fine = run(n_angle, panels)
    coarse = run(n_angle // 2, panels // 2)
    fD = complex(np.asarray(f(np.array([D])))[0])
    return CurrentIntegral(complex(fine), current_closed_form(X, tau, fD), abs(fine - coarse))


# ------------------------------------------------------------ singular loci

def eta_jump_check(X: VectorV, tau: complex, z_on: complex, normal: complex, dist: float = 1e-4):
    """Values of eta and partial_eta on both sides of c_X at z_on +- dist * normal."""
    if X.Q <= 0:
        raise DomainError("c_X exists for Q(X) > 0")
    za, zb = z_on + dist * normal, z_on - dist * normal
    ea, eb = eta(X, tau, za), eta(X, tau, zb)
    pa, pb = partial_eta(X, tau, za), partial_eta(X, tau, zb)
    return ea, eb, pa, pb


def eta_log_slope(X: VectorV, tau: complex, radii=(1e-2, 1e-3, 1e-4, 1e-5)) -> tuple[float, float]:
    """Fitted coefficient of log|z - D_X|^2 in eta / e(m tau) near D_X, and the
    prediction -pi erfc(2 sqrt(pi |m| v)) / (2 sqrt|m|) from E_1(w) ~ -log w,
    which is also the delta-mass of the elliptic current equation."""
    m = float(X.Q)
    if m >= 0:
        raise DomainError("D_X exists for Q(X) < 0")
    tau = complex(tau)
    D = X.cm_point()
    phase = cmath.exp(2j * math.pi * m * tau)
    pts = [(math.log(r * r), (eta(X, tau, D + r * cmath.exp(0.7j)) / phase).real) for r in radii]
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    slope = float(np.polyfit(xs, ys, 1)[0])
    predicted = -math.pi * math.erfc(2 * math.sqrt(math.pi * -m * tau.imag)) / (2 * math.sqrt(-m))
    return slope, predicted


# ------------------------------------------------- truncated theta integral

@dataclass(frozen=True)
class TruncatedThetaResult:
    m: Fraction
    h: int
    tau: complex
    T: float
    numeric: complex  # (1/pi) int_{F_T} theta_{m,h} dmu
    assembled: complex  # the (m, h) term of H_h(tau, 1) from the assembled series
    vectors: int
    error: float  # fine vs coarse quadrature


def lattice_vectors(m: Fraction, h: int, cut: int) -> list[VectorV]:
    """X = (b, c; a, -b) in L + h at level one (b in h/2 + Z, a, c in Z) with
    Q(X) = b^2 + a c = m and |a|, |2b| <= cut."""
    m = Fraction(m)
    out = []
    for a in range(-cut, cut + 1):
        for b2 in range(-cut, cut + 1):
            if b2 % 2 != h % 2:
                continue
            b = Fraction(b2, 2)
            rest = m - b * b
            if a == 0:
                if rest == 0:
                    out.extend(VectorV(b, Fraction(c), 0, 1) for c in range(-cut, cut + 1))
                continue
            c = rest / a
            if c.denominator == 1:
                out.append(VectorV(b, c, a, 1))
    return out


def _theta_sum(vectors: list[VectorV], tau: complex, z: np.ndarray) -> np.ndarray:
    u, v = tau.real, tau.imag
    x, y = z.real, z.imag
    total = np.zeros(z.shape, dtype=complex)
    for X in vectors:
        x1, x2, x3 = X.floats()
        p = (x3 * (x * x + y * y) - 2 * x1 * x - x2) / y
        xx = 2 * float(X.Q)
        total += np.exp(1j * math.pi * xx * u - math.pi * v * (xx + p * p))
    return math.sqrt(v) * total


def truncated_theta_coefficient(m, h: int, tau: complex, T: float = 6.0, cut: int = 24,
                                nx: int = 32, ny: int = 24) -> TruncatedThetaResult:
    """The (m, h) Fourier term of the regularized lift of f = 1 at level one,
    by direct integration of the coset theta sum over the height-T truncated
    fundamental domain, divided by pi. Slow: intended as an opt-in oracle.

    Indices with 4m a square are refused: there the integral grows like
    (2/pi) e(m tau) log T, and the constant left after removing that growth
    has not been matched against the square-index coefficient."""
    from modtrace.genseries import assemble
    from modtrace.qseries import builtin

    m = Fraction(m)
    tau = complex(tau)
    if m == 0:
        raise DomainError("index 0 is handled by the volume term")
    if (4 * m).denominator != 1:
        raise DomainError("index must be d/4 at level one")
    d = int(4 * m)
    if d > 0 and math.isqrt(d) ** 2 == d:
        raise DomainError(f"square index {m} is not supported")
    vectors = lattice_vectors(m, h, cut)
    if not vectors:
        raise DomainError(f"no lattice vectors of length {m} in L + {h}")
    from modtrace.traces import fundamental_domain_integral

    integral, err = fundamental_domain_integral(lambda z: _theta_sum(vectors, tau, z), T, nx, ny)
    integral /= math.pi
    series = assemble(builtin("const"), d_max=abs(d))
    # H_h(tau) picks the intro terms at d = 4m with d = h mod 2, evaluated at tau / 4, doubled
    assembled = 2 * sum(t.value(tau / 4) for t in series.terms if t.index == d)
    return TruncatedThetaResult(m, h, tau, T, integral, assembled, len(vectors),
                                err / math.pi)
