import cmath
import math
import random
from fractions import Fraction

import numpy as np
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modtrace import thetakernel as tk
from modtrace import verify
from modtrace.errors import DomainError
from modtrace.qseries import builtin, evaluate_many
from modtrace.quadforms import Mat

halves = st.integers(-6, 6).map(lambda k: Fraction(k, 2))
vectors = st.builds(tk.VectorV, halves, halves, halves).filter(lambda X: not X.is_zero and X.Q != 0)
points = st.builds(complex, st.floats(-1, 1), st.floats(0.5, 2))
sl2 = st.builds(lambda seed: verify.random_sl2(random.Random(seed)), st.integers(0, 10 ** 6))


def test_majorant_examples():
    md = tk.majorant_data(tk.VectorV(1, 0, 0), 1j)
    assert md.pairing == 0 and md.R == 2
    assert tk.majorant_data(tk.VectorV(0, 1, -1), 1j).R == pytest.approx(0, abs=1e-15)


def test_q_is_exact():
    X = tk.VectorV(Fraction(1, 2), Fraction(3, 2), -1, 2)
    assert X.Q == 2 * (Fraction(1, 4) - Fraction(3, 2))
    assert tk.VectorV.from_form(1, 1, 1).Q == -3


@settings(max_examples=40, deadline=None)
@given(vectors, points, sl2)
def test_majorant_equivariance(X, z, g):
    ginv = Mat(g.d, -g.b, -g.c, g.a)
    gz = (g.a * z + g.b) / (g.c * z + g.d)
    a, b = tk.majorant_data(X.act(ginv), z), tk.majorant_data(X, gz)
    assert a.R == pytest.approx(b.R, abs=1e-9 * max(1.0, b.R))
    assert a.majorant == pytest.approx(b.majorant, abs=1e-9 * max(1.0, abs(b.majorant)))


@settings(max_examples=30, deadline=None)
@given(vectors, points, points, sl2)
def test_kernel_equivariance(X, tau, z, g):
    ginv = Mat(g.d, -g.b, -g.c, g.a)
    gz = (g.a * z + g.b) / (g.c * z + g.d)
    Xg = X.act(ginv)
    for fn in (tk.phi0, tk.phi1, tk.xi_kudla):
        a, b = fn(Xg, tau, z), fn(X, tau, gz)
        assert abs(a - b) <= 1e-10 * abs(b) + 1e-300
    if tk.majorant_data(X, gz).R > 0.3:
        a, b = tk.eta(Xg, tau, z), tk.eta(X, tau, gz)
        assert abs(a - b) <= 1e-10 * abs(b) + 1e-300


def test_phi0_values():
    v = 2.0
    assert abs(tk.phi0(tk.VectorV(1, 0, 0), v * 1j, 1j)) == pytest.approx(math.sqrt(v) * math.exp(-2 * math.pi * v))
    X = tk.VectorV(0, 1, -1)  # Q = -1, D_X = i
    md = tk.majorant_data(X, X.cm_point())
    assert md.majorant == pytest.approx(-2 * float(X.Q))
    assert abs(tk.phi0(X, 1j, X.cm_point())) == pytest.approx(math.exp(-2 * math.pi))


def test_zero_vector_rejected():
    with pytest.raises(DomainError):
        tk.phi0(tk.VectorV(0, 0, 0), 1j, 1j)


def test_u_periodicity():
    X = tk.VectorV(Fraction(1, 2), 1, Fraction(-3, 2))
    tau, z = 0.3 + 1.1j, -0.2 + 0.9j
    assert tk.laplace_commutation_check(X, tau + 1, z) == pytest.approx(tk.laplace_commutation_check(X, tau, z),
                                                                         rel=1e-2, abs=1e-8)


def test_kernel_suite_passes():
    for c in verify.kernel_suite(seed=1):
        assert c.passed, c


def test_partial_eta_diagonal_closed_form():
    m = 4.0
    X = tk.VectorV(2, 0, 0)
    for tau, z in ((0.2 + 1j, 0.3 + 1.1j), (-0.1 + 0.7j, -0.4 + 0.5j)):
        v, x, y = tau.imag, z.real, z.imag
        expected = (-math.copysign(1, x) * (math.pi * 1j / (2 * math.sqrt(m)))
                    * math.erfc(2 * math.sqrt(math.pi * v * m) * abs(x) / y) * cmath.exp(2j * math.pi * m * tau) / z)
        assert tk.partial_eta(X, tau, z) == pytest.approx(expected, rel=1e-12)
        assert tk.partial_eta_diagonal(m, tau, z) == pytest.approx(expected, rel=1e-12)


def test_eta_singular_locus_errors():
    X = tk.VectorV(0, 1, -1)
    with pytest.raises(DomainError):
        tk.eta(X, 1j, 1j)
    with pytest.raises(DomainError):
        tk.partial_eta(tk.VectorV(1, 0, 0), 1j, 2j)


def test_eta_singularities():
    for c in verify.eta_singularities():
        assert c.passed, c


def test_current_integral_constant():
    X = tk.VectorV(0, 1, -1)
    ones = np.ones_like
    for tau in (1j, 2j, 0.3 + 1j):
        ci = tk.current_integral_elliptic(ones, X, tau)
        assert ci.modulus_residual < 1e-4
        assert ci.residual < 1e-4


def test_current_integral_j1():
    j1 = builtin("j1")
    for X in (tk.VectorV(0, 1, -1), tk.VectorV(1, 1, -2)):
        ci = tk.current_integral_elliptic(lambda z: evaluate_many(j1, z, 1e-8)[0], X, 1j)
        assert ci.residual < 1e-3


def test_current_needs_negative_length():
    with pytest.raises(DomainError):
        tk.current_integral_elliptic(np.ones_like, tk.VectorV(1, 0, 0), 1j)


def test_lattice_vectors():
    vs = tk.lattice_vectors(Fraction(-3, 4), 1, 6)
    assert vs and all(X.Q == Fraction(-3, 4) and X.x1.denominator == 2 for X in vs)
    assert all(X.x2.denominator == 1 and X.x3.denominator == 1 for X in vs)


@pytest.mark.slow
def test_truncated_theta_coefficient():
    r6 = tk.truncated_theta_coefficient(Fraction(-3, 4), 1, 1j, T=6)
    r10 = tk.truncated_theta_coefficient(Fraction(-3, 4), 1, 1j, T=10)
    wide = tk.truncated_theta_coefficient(Fraction(-3, 4), 1, 1j, T=6, cut=48)
    assert abs(r6.numeric - r6.assembled) <= 2e-2 * abs(r6.assembled)
    assert abs(r6.numeric - r10.numeric) <= 1e-2 * abs(r6.numeric)
    assert abs(r6.numeric - wide.numeric) <= 1e-3 * abs(r6.numeric)


@pytest.mark.slow
def test_truncated_theta_positive_nonsquare():
    r = tk.truncated_theta_coefficient(Fraction(5, 4), 1, 1j, T=6)
    assert abs(r.numeric - r.assembled) <= 1e-6 * abs(r.assembled)


@pytest.mark.parametrize("m, h", [(Fraction(1, 4), 1), (Fraction(1), 0), (Fraction(1, 3), 0)])
def test_truncated_theta_refuses(m, h):
    with pytest.raises(DomainError):
        tk.truncated_theta_coefficient(m, h, 1j)


@pytest.mark.parametrize("X, tau, z", [
    (tk.VectorV(-1, Fraction(-5, 2), 2), 0.18146956885172427 + 0.9098438534537668j, -0.735240174443518 + 1.128824798901785j),
    (tk.VectorV(-1, -3, 1), -0.5092285997045136 + 1.6269622716690888j, -0.5890231574811189 + 1.9238637348620413j),
    (tk.VectorV(Fraction(1, 2), 1, Fraction(1, 2)), 0.3 + 2.5j, 0.2 + 0.4j),
])
def test_eta_relative_accuracy_when_tiny(X, tau, z):
    # values around 1e-14 and below must still carry full relative precision
    md = tk.majorant_data(X, z)
    v, Q = tau.imag, float(X.Q)
    with mpmath.workdps(50):  # at 30 digits quad misses the fast decay on [v, v+1]
        radial = mpmath.quad(lambda t: mpmath.e1(2 * mpmath.pi * md.R * t) * mpmath.exp(4 * mpmath.pi * Q * t)
                             / mpmath.sqrt(t), [v + k / 8 for k in range(9)] + [v + 10, mpmath.inf])
    expected = complex(mpmath.pi * radial) * cmath.exp(2j * math.pi * Q * tau)
    got = tk.eta(X, tau, z)
    assert abs(got - expected) <= 1e-10 * abs(expected)
