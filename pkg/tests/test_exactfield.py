from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from xprod.exactfield import (
    E1, E2, E3, IncompatibleTowers, Mat3, ParseError, ProjPoint, QuadExt, Vec3, adjoin_sqrt,
    cross, format_scalar, inverse, join_towers, orthogonal_basis, parse_projpoint,
    parse_scalar, parse_vec3, proj_cross, rational_rotation, sdiv, sign, spow, sqrt_in,
    to_float, tower_of,
)

from strategies import int_vectors, nonzero_vectors, quad, rationals, sympy_cross, to_sympy, vectors


# --- cross products ---------------------------------------------------------

def test_cross_basis():
    assert cross(E1, E2) == E3


def test_cross_hand_value():
    assert cross(Vec3(1, 2, 3), Vec3(4, 5, 6)) == Vec3(-3, 6, -3)


@given(vectors)
def test_cross_self_is_zero(v):
    assert cross(v, v).is_zero()


@given(vectors, vectors)
def test_cross_matches_sympy(v, w):
    got = [to_sympy(c) for c in cross(v, w)]
    assert got == sympy_cross([to_sympy(c) for c in v], [to_sympy(c) for c in w])


@given(vectors, vectors, vectors, rationals)
def test_cross_bilinear_anticommutative(u, v, w, a):
    assert cross(u + v * a, w) == cross(u, w) + cross(v, w) * a
    assert cross(v, w) == -cross(w, v)


# --- projective points ------------------------------------------------------

def test_proj_cross_examples():
    P = lambda *c: ProjPoint(Vec3(*c))  # noqa: E731
    assert proj_cross(P(1, 0, 0), P(0, 1, 0)) == P(0, 0, 1)
    assert proj_cross(P(2, 4, 6), P(1, 2, 3)) is None
    assert proj_cross(P(2, 0, 0), P(0, 3, 0)) == P(0, 0, 1)


@given(nonzero_vectors, rationals.filter(lambda q: q != 0))
def test_projpoint_scale_invariant(v, lam):
    p, q = ProjPoint(v), ProjPoint(v * lam)
    assert p == q and hash(p) == hash(q)
    assert p.canonical == q.canonical
    first = next(c for c in p.canonical if c != 0)
    assert first == 1


def test_zero_point_rejected():
    with pytest.raises(ValueError):
        ProjPoint(Vec3(0, 0, 0))
    with pytest.raises(ParseError):
        parse_projpoint("<0 : 0 : 0>")


# --- scalars and towers -----------------------------------------------------

def test_scalar_examples():
    assert Fraction(1, 3) + Fraction(1, 6) == Fraction(1, 2)
    r2 = QuadExt(0, 1, (2,))
    assert (1 + r2) * (1 - r2) == -1
    assert r2 * r2 == 2
    assert spow(2, -2) == Fraction(1, 4)


@settings(max_examples=60)
@given(quad(), quad())
def test_quadext_matches_sympy(x, y):
    try:
        join_towers(tower_of(x), tower_of(y))
    except IncompatibleTowers:
        return
    for got, want in ((x + y, to_sympy(x) + to_sympy(y)), (x - y, to_sympy(x) - to_sympy(y)),
                      (x * y, to_sympy(x) * to_sympy(y))):
        assert sympy.simplify(to_sympy(got) - want) == 0
    if y != 0:
        assert sympy.simplify(to_sympy(sdiv(x, y)) - to_sympy(x) / to_sympy(y)) == 0
        assert x == sdiv(x, y) * y


@given(quad())
def test_sign_matches_float(x):
    f = float(to_sympy(x))
    assert sign(x) == (0 if x == 0 else (1 if f > 0 else -1))
    assert to_float(x) == pytest.approx(f)


def test_incompatible_towers():
    with pytest.raises(IncompatibleTowers):
        QuadExt(0, 1, (2,)) + QuadExt(0, 1, (3,))


def test_nested_tower_and_sqrt():
    r2, t2 = adjoin_sqrt(2)
    r3, t3 = adjoin_sqrt(3, t2)
    assert t3 == (2, 3)
    x = r2 + r3
    assert sympy.simplify(to_sympy(x * x) - (5 + 2 * sympy.sqrt(6))) == 0
    # 3 + 2 sqrt 2 = (1 + sqrt 2)^2
    assert sqrt_in(3 + 2 * r2, t2) in (1 + r2, -1 - r2)
    assert sqrt_in(3, t2) is None
    assert inverse(r2) * r2 == 1


def test_adjoin_square_is_rational():
    assert adjoin_sqrt(Fraction(9, 4)) == (Fraction(3, 2), ())


@given(quad())
def test_format_parse_round_trip(x):
    assert parse_scalar(format_scalar(x)) == x


def test_nested_text_round_trip():
    r2, t2 = adjoin_sqrt(2)
    r13, t = adjoin_sqrt(13 + 0 * r2, t2)
    y = 1 + r13 * r2
    text = format_scalar(y)
    back = parse_scalar(text)
    assert back == y and tower_of(back) == tower_of(y)


def test_vec_text_round_trip():
    v = Vec3(1, Fraction(-2, 3), QuadExt(1, 1, (5,)))
    assert parse_vec3(str(v)) == v
    p = ProjPoint(v)
    assert parse_projpoint(str(p)) == p


# --- rotations --------------------------------------------------------------

def test_rotation_examples():
    assert rational_rotation(0, 0, 0) == Mat3.identity()
    assert rational_rotation(1, 0, 0) == Mat3.of([[1, 0, 0], [0, 0, -1], [0, 1, 0]])
    assert orthogonal_basis((0, 0, 0), (1, 1, 1)) == (E1, E2, E3)
    assert orthogonal_basis((1, 0, 0), (2, 1, 3)) == (Vec3(2, 0, 0), Vec3(0, 0, -1), Vec3(0, 3, 0))


@given(rationals, rationals, rationals)
def test_rotation_is_orthogonal(p, q, r):
    O = rational_rotation(p, q, r)
    assert O @ O.transpose() == Mat3.identity()
    assert O.det() == 1
    assert O.is_rotation()


@given(st.tuples(rationals, rationals, rationals),
       st.tuples(*[rationals.filter(lambda q: q != 0)] * 3))
def test_orthogonal_basis_postcondition(skew, scales):
    b = orthogonal_basis(skew, scales)
    assert all(not v.is_zero() for v in b)
    assert b[0].dot(b[1]) == b[1].dot(b[2]) == b[0].dot(b[2]) == 0


@given(rationals, rationals, rationals, int_vectors, int_vectors)
def test_cross_commutes_with_rotation(p, q, r, v, w):
    O = rational_rotation(p, q, r)
    assert cross(O @ v, O @ w) == O @ cross(v, w)
