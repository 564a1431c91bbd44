import json
import math
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modtrace.errors import DomainError
from modtrace.qseries import (QExpansion, builtin, evaluate, evaluate_many, j_expansion, jm_basis,
                              load_input, parse_input)

DATA = Path(__file__).parent / "data"
# OEIS A000521
J_COEFFS = [1, 744, 196884, 21493760, 864299970, 20245856256, 333202640600, 4252023300096,
            44656994071935, 401490886656000]


def test_j_coefficients():
    j = j_expansion(8)
    assert [j[n] for n in range(-1, 9)] == J_COEFFS
    assert all(isinstance(c, int) for c in j.coeffs)


def test_j_against_eisenstein_ratio():
    # E4^3 / Delta with Delta = q prod (1 - q^n)^24, in floating arithmetic via mpmath
    q = mpmath.mpf("0.01")
    e4 = 1 + 240 * mpmath.nsum(lambda n: n ** 3 * q ** n / (1 - q ** n), [1, mpmath.inf])
    delta = q * mpmath.nprod(lambda n: (1 - q ** n) ** 24, [1, mpmath.inf])
    j = j_expansion(60)
    series = sum(c * q ** n for n, c in j.items())
    assert float(abs(series - e4 ** 3 / delta)) < 1e-9


def test_jm_basis():
    assert jm_basis(0, 10)[0] == 1 and jm_basis(0, 10).order == 0
    j, j1 = j_expansion(20), jm_basis(1, 20)
    assert j1[0] == 0 and all(j1[n] == j[n] for n in range(1, 21)) and j1[-1] == 1
    j2 = jm_basis(2, 20)
    assert j2[-2] == 1 and j2[-1] == 0 and j2[0] == 0
    jj = j_expansion(21)
    ref = jj * jj - jj * 1488 + 159768
    assert all(j2[n] == ref[n] for n in range(-2, 21))


@pytest.mark.parametrize("m", [3, 4, 5])
def test_jm_principal_parts(m):
    f = jm_basis(m, 12)
    assert f[-m] == 1 and all(f[n] == 0 for n in range(-m + 1, 1))


def test_evaluate_classical_values():
    j = builtin("j")
    assert abs(evaluate(j, 1j).value - 1728) < 1e-8
    rho = complex(-1, math.sqrt(3)) / 2
    assert abs(evaluate(j, rho).value) < 1e-8
    j1 = builtin("j1")
    assert abs(evaluate(j1, 1j + 7).value - evaluate(j1, 1j).value) < 1e-9


def test_evaluate_bound_is_small():
    ev = evaluate(builtin("j1"), 0.3 + 0.9j)
    assert ev.bound <= 1e-10


def _moebius(word, z):
    for w in word:
        z = -1 / z if w == "S" else z + (1 if w == "T" else -1)
    return z


points = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.87, 3.0))
words = st.lists(st.sampled_from(["S", "T", "t"]), max_size=5)


@settings(max_examples=100, deadline=None)
@given(points, words)
def test_gamma_invariance(z, word):
    f = builtin("j1")
    gz = _moebius(word, z)
    if gz.imag < 0.05:
        return
    a, b = evaluate(f, z), evaluate(f, gz)
    assert abs(a.value - b.value) <= a.bound + b.bound + 1e-9 * abs(a.value)


def test_tail_bound_honesty():
    f64, f32 = builtin("j2", 64), builtin("j2", 32)
    for z in (0.1 + 0.9j, 0.5 + 0.87j, 0.2 + 2j):
        a, b = evaluate(f64, z), evaluate(f32, z)
        assert abs(a.value - b.value) <= a.bound + b.bound


def test_evaluate_many_matches_scalar():
    f = builtin("j1")
    zs = [0.1 + 0.2j, -3.3 + 0.05j, 0.4 + 1.1j]
    vals, bound = evaluate_many(f, zs)
    for z, v in zip(zs, vals):
        assert abs(v - evaluate(f, z).value) <= 1e-9 * max(1.0, abs(v))
    assert bound >= 0


def test_upper_half_plane_only():
    with pytest.raises(DomainError):
        evaluate(builtin("j1"), -1j)


def test_input_document_roundtrip(tmp_path):
    j1 = builtin("j1", 30)
    doc = {"group": "gamma1", "cusps": [{"label": "inf", "alpha": "1", "beta": "1", "k": "0",
                                          "aplus": j1.aplus.to_json(), "aminus": {}}]}
    path = tmp_path / "j1.json"
    path.write_text(json.dumps(doc))
    f = load_input(path)
    assert f.aplus[1] == 196884 and f.group.p == 1
    z = 0.2 + 1.3j
    assert abs(evaluate(f, z).value - evaluate(j1, z).value) < 1e-9


def test_input_rationals_stay_exact():
    f = parse_input({"group": "gamma1", "cusps": [{"aplus": {"-1": "1/3", "0": "2"}}]})
    assert f.aplus[-1] == Fraction(1, 3)


def test_malformed_input():
    with pytest.raises(DomainError):
        parse_input({"group": "gamma1"})
    with pytest.raises(DomainError):
        parse_input({"group": "gamma9", "cusps": [{"aplus": {"-1": "1"}}]})
    with pytest.raises(DomainError):
        parse_input({"group": "gamma1", "cusps": [{"aplus": {"-1": "1"}, "aminus": {"2": "1"}}]})


def test_arithmetic():
    a = QExpansion.from_dict({-1: 1, 0: 2, 1: 3}, n_max=4)
    b = a * a
    assert b[-2] == 1 and b[-1] == 4 and b[0] == 10
    with pytest.raises(IndexError):
        a.truncate(10)


def test_gamma0star_hauptmodul_invariance():
    f = load_input(DATA / "hauptmodul_2.json")
    assert f.aplus[1] == 4372 and f.aplus[2] == 96256
    for z in (0.13 + 0.71j, -0.4 + 0.3j, 0.05 + 0.2j):
        base = evaluate(f, z).value
        for w in (-1 / (2 * z), z / (2 * z + 1), z + 1):
            assert abs(evaluate(f, w).value - base) <= 1e-8 * max(1.0, abs(base))
    # Fricke fixed point i/sqrt 2 is real-valued
    assert abs(evaluate(f, 1j / math.sqrt(2)).value.imag) < 1e-9
