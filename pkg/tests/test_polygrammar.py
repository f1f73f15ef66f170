import sys
from pathlib import Path

import pytest
import sympy as sp

# Ensure the repository root is importable when running this file standalone
HERE = Path(__file__).resolve().parent
REPO_ROOT = HERE.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

import polygrammar as uut  # uut = unit under test

G, t1, t2 = sp.symbols("G t1 t2")


def test_static_generating_function():
    poly = uut.parse_polynomial("G*t1 - t2", uut.GENFUNC_PROJECTIVE)
    assert poly.gens == (G, t1, t2)
    assert sp.expand(poly.as_expr() - (G * t1 - t2)) == 0


@pytest.mark.parametrize(
    "text, expected",
    [
        ("2i*G", 2 * sp.I * G),
        ("(1+i)*t1", (1 + sp.I) * t1),
        ("1.5+2i", sp.Rational(3, 2) + 2 * sp.I),
        ("3-i", 3 - sp.I),
        ("G^3 - 1/4", G**3 - sp.Rational(1, 4)),
        ("-(G - t1)^2", -((G - t1) ** 2)),
        ("2.5e-1i", sp.Rational(1, 4) * sp.I),
    ],
)
def test_literals_and_operators(text, expected):
    expr = uut.parse_expr(text, uut.GENFUNC_PROJECTIVE)
    assert sp.expand(expr - expected) == 0


def test_numbers_are_exact():
    expr = uut.parse_expr("0.1*G", uut.GENFUNC_PROJECTIVE)
    assert expr.coeff(G) == sp.Rational(1, 10)


def test_pair_variables():
    poly = uut.parse_polynomial("tau0 - xi0^2 - 1/4", uut.GENFUNC_PAIR)
    assert poly.degree(sp.Symbol("xi0")) == 2
    assert poly.degree(sp.Symbol("xi1")) == 0


def test_unknown_variable_reports_position():
    with pytest.raises(uut.ParseError) as exc:
        uut.parse_polynomial("G*t1 - q", uut.GENFUNC_PROJECTIVE)
    assert exc.value.position == 7
    assert "unknown variable" in str(exc.value)


@pytest.mark.parametrize(
    "text, position",
    [
        ("G*t1 - ", 7),        # missing operand at end of input
        ("G*(t1 - t2", 10),    # unclosed parenthesis
        ("G $ t1", 2),         # stray character
        ("G^x", 2),            # symbolic exponent
        ("G/t1", 1),           # division by a variable
        ("G t1", 2),           # juxtaposition is not multiplication
    ],
)
def test_malformed_text(text, position):
    with pytest.raises(uut.ParseError) as exc:
        uut.parse_polynomial(text, uut.GENFUNC_PROJECTIVE)
    assert exc.value.position == position


def test_empty_text():
    with pytest.raises(uut.ParseError):
        uut.parse_polynomial("   ", uut.GENFUNC_PROJECTIVE)


def test_parse_error_is_value_error():
    assert issubclass(uut.ParseError, ValueError)


def test_format_round_trip():
    poly = uut.parse_polynomial("G*t1 - t2 + 2i*G", uut.GENFUNC_PROJECTIVE)
    again = uut.parse_polynomial(uut.format_polynomial(poly), uut.GENFUNC_PROJECTIVE)
    assert sp.expand(again.as_expr() - poly.as_expr()) == 0
