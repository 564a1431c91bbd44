import math
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modtrace import traces
from modtrace.errors import DomainError
from modtrace.qseries import builtin, load_input
from modtrace.quadforms import Mat, S, T, class_reps, hurwitz_class_number
from modtrace.traces import LatticeContext

J1, J2, ONE = builtin("j1"), builtin("j2"), builtin("const")
HAUPT2 = load_input(Path(__file__).parent / "data" / "hauptmodul_2.json")


def pell_closed_form(d):
    """(1/2 pi sqrt d) sum over classes of 2 log eps."""
    total = 0.0
    for q in class_reps(d):
        t, u = traces.automorph(q).pell
        d0 = q.primitive().disc
        total += 2 * math.log((t + u * math.sqrt(d0)) / 2)
    return total / (2 * math.pi * math.sqrt(d))


@pytest.mark.parametrize("d,expected", [(-3, -248), (-4, 492), (-7, -4119), (-8, 7256)])
def test_cm_traces_j1(d, expected):
    r = traces.trace_cm(J1, d)
    assert abs(r.value - expected) < 1e-6 and r.method == "cm" and r.error >= 0


def test_cm_trace_constant_exact():
    assert traces.trace_cm_exact_constant(-3) == Fraction(1, 3)
    assert traces.trace_cm_exact_constant(-4) == Fraction(1, 2)
    assert traces.trace_cm_exact_constant(-23) == 3


def test_hurwitz_numbers_low():
    # H(3), ..., H(20) from the tables
    table = {3: Fraction(1, 3), 4: Fraction(1, 2), 7: 1, 8: 1, 11: 1, 12: Fraction(4, 3), 15: 2,
             16: Fraction(3, 2), 19: 1, 20: 2}
    for n, h in table.items():
        assert traces.trace_cm_exact_constant(-n) == h == hurwitz_class_number(n)


def test_lattice_convention_doubles():
    for d in (-3, -4, -7, -8, -11, -12, -15, -16, -19, -20):
        ctx = LatticeContext(h=d % 2, convention="lattice")
        lat = traces.lattice_trace(J1, Fraction(d, 4), ctx)
        assert lat.value == 2 * traces.trace(J1, d).value


def test_lattice_wrong_residue_is_empty():
    ctx = LatticeContext(h=1, convention="lattice")
    assert traces.lattice_trace(J1, Fraction(-4, 4), ctx).value == 0


def test_empty_discriminants():
    for d in (-2, -5, 2, 3, 6, 7):
        r = traces.trace(J1, d)
        assert r.value == 0 and r.method == "empty"


@pytest.mark.parametrize("d", [5, 8, 12, 13])
def test_pell_closed_form(d):
    r = traces.trace_closed_geodesic(ONE, d)
    assert abs(r.value - pell_closed_form(d)) < 1e-9


def test_constant_closed_geodesic_values():
    assert traces.trace(ONE, 5).real == pytest.approx(0.137003, abs=1e-6)
    assert traces.trace(ONE, 5).real > 0
    assert traces.trace(ONE, 8).real == pytest.approx(math.log(3 + 2 * math.sqrt(2)) / (math.pi * math.sqrt(8)),
                                                        abs=1e-12)


def test_panel_doubling_stable():
    a = traces.trace_closed_geodesic(J1, 5, panels=32)
    b = traces.trace_closed_geodesic(J1, 5, panels=64)
    assert abs(a.value - b.value) < 1e-9


def test_closed_traces_are_real():
    for d in (5, 8, 12, 13, 17, 21):
        assert abs(traces.trace(J1, d).value.imag) < 1e-9


words = st.lists(st.sampled_from([S, T(1), T(-1)]), min_size=1, max_size=5)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([5, 12, 13, 17]), words)
def test_cycle_integral_class_invariance(d, word):
    g = Mat(1, 0, 0, 1)
    for h in word:
        g = g @ h
    q = class_reps(d)[0]
    a, ea = traces.cycle_integral(J1, q)
    b, eb = traces.cycle_integral(J1, q.act(g))
    assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_square_d1_matches_central_sum():
    ei_side, contour, _ = traces.central_value_sides(J1)
    r = traces.trace_square_regularized(J1, 1, c_plus=1)
    assert abs(r.value - ei_side / (2 * math.pi)) < 1e-10
    assert abs(ei_side - contour) < 1e-6


@pytest.mark.parametrize("f", [ONE, J1, J2], ids=["one", "j1", "j2"])
@pytest.mark.parametrize("d", [1, 4, 9])
def test_square_variants_agree(f, d):
    a = traces.trace_square_regularized(f, d, variant="ei")
    b = traces.trace_square_regularized(f, d, variant="digamma")
    assert abs(a.value - b.value) < 1e-6


def test_square_split_height_independence():
    ref = traces.trace_square_regularized(J2, 4).value
    for cp in (0.5, 1.0, 2.0):
        for variant in ("ei", "digamma"):
            assert abs(traces.trace_square_regularized(J2, 4, c_plus=cp, variant=variant).value - ref) < 1e-6


def test_square_constant_closed_form():
    assert traces.trace_square_remark_constant(1) == pytest.approx(-math.log(2) / math.pi, abs=1e-15)
    expected = (math.log(1 / 4) + math.log(2 / 4) + math.log(1 / 4) + math.log(4 / 4)) / (2 * math.pi)
    assert traces.trace_square_remark_constant(2) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_square_constant_matches_regularized_trace(m):
    # the formula is in the lattice normalization, twice the discriminant trace at d = 4 m^2
    lat = traces.trace_square_remark_constant(m)
    assert lat <= 0
    assert lat == pytest.approx(2 * traces.trace(ONE, 4 * m * m).real, abs=1e-9)


def test_complementary_traces():
    assert traces.trace_complementary(J1, 1) == 2
    assert traces.trace_complementary(J1, 4) == 0
    assert traces.trace_complementary(ONE, 9) == 0
    for d in (1, 4, 9, 16, 25):
        assert traces.trace_complementary(J2, d) == traces.trace_complementary_cusp_formula(J2, d)
    assert traces.trace_complementary(builtin("j6"), 9) == traces.trace_complementary_cusp_formula(builtin("j6"), 9)


def test_trace_zero():
    assert traces.trace_zero(J1) == 4
    assert traces.trace_zero(ONE) == Fraction(-1, 6) == traces.volume()
    assert traces.trace_zero(J2) == 4 * 3  # 4 sigma_1(2)


def test_average_value_constant():
    av = traces.average_value_numeric(ONE, T=3.0)
    assert abs(av.value - math.pi / 3) < 1e-10


def test_gamma0star_square_variants():
    for d in (1, 4):
        a = traces.trace(HAUPT2, d, variant="ei")
        b = traces.trace(HAUPT2, d, variant="digamma")
        assert abs(a.value - b.value) < 1e-6


def test_gamma0star_trace_zero_matches_average():
    tr0 = traces.trace_zero(HAUPT2)
    av = traces.average_value_numeric(HAUPT2, T=4.0)
    assert abs(av.value - (-2 * math.pi * float(tr0))) < 1e-2


def test_square_domain_errors():
    with pytest.raises(DomainError):
        traces.trace_square_regularized(J1, 5)
    with pytest.raises(DomainError):
        traces.trace_closed_geodesic(J1, 9)
    with pytest.raises(DomainError):
        traces.trace_cm(J1, 5)
