from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from xprod import ringterms as rt
from xprod.exactfield import (
    E1, E2, E3, ProjPoint, QuadExt, Vec3, adjoin_sqrt, proj_cross, rational_rotation,
)
from xprod.problems import Witness, verify_witness
from xprod.search import SearchConfig, brute_search
from xprod.terms import (
    Cross, ProjConst, Var, constant_leaves, eval_projective, variables,
)
from xprod.vonstaudt import (
    SIZE_CONSTANT, DecodeError, InvalidWitness, NotARoot, compile_constant_free,
    compile_equation, compile_system, compile_with_constants, frame_constants, frame_from_basis,
    frame_from_points, frame_points, gadget_add, gadget_mul, gadget_sub, iota,
    gadget_identities, observation_points, random_frame, root_from_witness, standard_frame,
    theta_decode, theta_encode, to_v1_v3, to_v3_v2, witness_from_root,
)

from strategies import rationals

P = lambda *c: ProjPoint(Vec3(*c))  # noqa: E731
ev = lambda t: eval_projective(t, {})  # noqa: E731
SQRT2 = QuadExt(0, 1, (2,))


# --- frames -----------------------------------------------------------------

def test_standard_frame():
    f = standard_frame()
    assert (f.V1, f.V2, f.V3) == (P(1, 0, 0), P(0, 1, 0), P(0, 0, 1))
    assert f.V12 == P(1, -1, 0) and f.V23 == P(0, 1, -1)
    assert proj_cross(f.V1, f.V2) == f.V3


def test_frame_from_basis_examples():
    assert frame_from_basis((E1, E2, E3)) == standard_frame()
    f = frame_from_basis((Vec3(2, 0, 0), Vec3(0, 3, 0), Vec3(0, 0, 5)))
    assert f.V12 == P(2, -3, 0) and f.V23 == P(0, 3, -5)
    left = frame_from_basis((E1, E3, E2))
    assert proj_cross(left.V1, left.V2) == left.V3
    assert proj_cross(left.V2, left.V3) == left.V1
    with pytest.raises(ValueError):
        frame_from_basis((E1, Vec3(1, 1, 0), E3))


@given(st.integers(0, 10 ** 9))
def test_random_frame_invariants(seed):
    f = random_frame(random.Random(seed))
    v1, v2, v3 = f.basis
    assert v1.dot(v2) == v2.dot(v3) == v1.dot(v3) == 0
    assert proj_cross(f.V1, f.V2) == f.V3
    assert proj_cross(f.V2, f.V3) == f.V1
    assert proj_cross(f.V3, f.V1) == f.V2


# --- encoding ---------------------------------------------------------------

def test_theta_examples():
    f = standard_frame()
    assert theta_encode(0, f) == f.V1
    assert theta_encode(1, f) == f.V12
    assert theta_encode(2, f) == P(1, -2, 0)
    assert theta_decode(P(1, -5, 0), f) == 5
    assert theta_decode(f.V2, f) is None
    assert theta_decode(P(1, -2, 3), f) is None


@given(st.integers(0, 10 ** 9), rationals)
def test_theta_round_trip(seed, r):
    f = random_frame(random.Random(seed))
    assert theta_decode(theta_encode(r, f), f) == r


def test_theta_round_trip_sqrt2():
    f = standard_frame()
    assert theta_decode(theta_encode(SQRT2, f), f) == SQRT2


# --- gadgets ----------------------------------------------------------------

def test_mul_gadget_hand_values():
    f = standard_frame()
    refs = frame_constants(f)
    R, S = ProjConst(theta_encode(2, f)), ProjConst(theta_encode(3, f))
    assert ev(to_v3_v2(R, refs)) == P(0, -2, 1)
    assert ev(to_v1_v3(S, refs)) == P(1, 0, -3)
    assert ev(gadget_mul(R, S, refs)) == P(1, -6, 0)


def test_sub_add_examples():
    f = standard_frame()
    refs = frame_constants(f)
    th = lambda r: ProjConst(theta_encode(r, f))  # noqa: E731
    assert ev(gadget_sub(th(0), th(0), refs)) == f.V1
    assert ev(gadget_add(th(1), th(1), refs)) == theta_encode(2, f)


def test_iota_examples():
    f = standard_frame()
    refs = frame_constants(f)
    W = ProjConst(P(1, -2, 3))
    w3 = Cross(W, refs.V3)
    assert ev(w3) == P(-2, -1, 0)
    assert ev(Cross(w3, refs.V3)) == P(-1, 2, 0)
    assert ev(Cross(Cross(w3, refs.V3), refs.V2)) == P(0, 0, -1)
    assert ev(iota(W, refs)) == P(1, -2, 0)
    assert ev(iota(ProjConst(theta_encode(7, f)), refs)) == theta_encode(7, f)
    assert ev(iota(ProjConst(P(0, 1, 1)), refs)) is None


@settings(max_examples=150)
@given(st.integers(0, 10 ** 9), rationals, rationals)
def test_gadget_identities_random_frames(seed, r, s):
    assert gadget_identities(random_frame(random.Random(seed)), r, s) == []


@settings(max_examples=150)
@given(st.integers(0, 10 ** 9), rationals, rationals)
def test_gadgets_total(seed, r, s):
    # the gadgets never hit an undefined sub-product on encoded inputs
    f = random_frame(random.Random(seed))
    refs = frame_constants(f)
    R, S = ProjConst(theta_encode(r, f)), ProjConst(theta_encode(s, f))
    for g in (gadget_mul, gadget_sub, gadget_add):
        assert ev(g(R, S, refs)) is not None


def test_gadgets_total_on_small_grid():
    # exhaustive over r, s = a/b with |a| <= 4, b <= 3, including r = s and zeros
    values = sorted({Fraction(a, b) for a in range(-4, 5) for b in range(1, 4)})
    frames = [standard_frame()] + [random_frame(random.Random(k)) for k in range(3)]
    undefined = []
    for f in frames:
        refs = frame_constants(f)
        enc = {x: ProjConst(theta_encode(x, f)) for x in values}
        for r in values:
            for s in values:
                for g in (gadget_mul, gadget_sub, gadget_add):
                    if ev(g(enc[r], enc[s], refs)) is None:
                        undefined.append((g.__name__, r, s))
    assert undefined == []


def test_gadgets_over_quadratic_field():
    f = standard_frame()
    refs = frame_constants(f)
    R = ProjConst(theta_encode(SQRT2, f))
    assert ev(gadget_mul(R, R, refs)) == theta_encode(2, f)
    assert ev(gadget_add(R, R, refs)) == theta_encode(2 * SQRT2, f)


# --- compilation ------------------------------------------------------------

def test_compile_with_constants_shapes():
    f = standard_frame()
    refs = frame_constants(f)
    assert compile_with_constants(rt.parse_poly("X"), f) == Var("X")
    X = Var("X")
    want = gadget_sub(gadget_mul(X, X, refs), ProjConst(theta_encode(2, f)), refs)
    assert compile_with_constants(rt.parse_poly("X*X - 2"), f) == want


def test_commutation_example():
    f = standard_frame()
    t = compile_with_constants(rt.parse_poly("(X1 + X2) * X1 - 1"), f)
    value = eval_projective(t, {"X1": theta_encode(2, f), "X2": theta_encode(3, f)})
    assert value == theta_encode(9, f)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.integers(1, 3), st.integers(0, 10 ** 9), st.integers(0, 10 ** 9),
       st.lists(rationals, min_size=3, max_size=3))
def test_commutation_property(size, n_vars, pseed, fseed, xs):
    p = rt.random_ring_term(size, n_vars, pseed, "rational")
    f = random_frame(random.Random(fseed))
    t = compile_with_constants(p, f)
    point = {f"X{i + 1}": xs[i] for i in range(n_vars)}
    lhs = eval_projective(t, {k: theta_encode(v, f) for k, v in point.items() if k in variables(t)})
    assert lhs == theta_encode(rt.eval_poly(p, point), f)


def test_compile_equation_examples():
    f = standard_frame()
    inst = compile_equation(rt.parse_poly("X"), f)
    assert verify_witness(inst.to_problem(), Witness({"X": theta_encode(0, f)}))
    inst = compile_equation(rt.parse_poly("X*X - 2"), f)
    assert verify_witness(inst.to_problem(), Witness({"X": theta_encode(SQRT2, f)}))
    inst = compile_equation(rt.parse_poly("X*X + 1"), f)
    assert brute_search(inst.to_problem(), SearchConfig(bound=10)).verdict == "exhausted"


def test_constant_free_x2_minus_2():
    inst = compile_constant_free(rt.parse_poly("X*X - 2"))
    assert constant_leaves(inst.lhs) == 0
    assert set(inst.vars) == {"X", "A", "B", "C"}
    assert inst.rhs == Var("A")
    r, _ = adjoin_sqrt(2)
    w = witness_from_root({"X": r}, inst)
    assert verify_witness(inst.to_problem(), w)
    assert w.assignment["X"] == theta_encode(SQRT2, standard_frame())
    js = inst.to_json()
    assert js["rhs"] == "A" and js["mode"] == "projective"


def test_constant_free_rejects_fractions():
    with pytest.raises(rt.DisallowedConstant):
        compile_constant_free(rt.parse_poly("X - 1/2"))


def test_fresh_frame_names_avoid_clashes():
    inst = compile_constant_free(rt.parse_poly("A*B - C"))
    assert len(set(inst.frame_vars) & {"A", "B", "C"}) == 0
    w = witness_from_root({"A": 2, "B": 3, "C": 6}, inst)
    assert root_from_witness(w, inst) == {"A": 2, "B": 3, "C": 6}


# --- frame synthesis --------------------------------------------------------

def test_frame_subterms_values():
    pts = frame_points(P(1, 0, 0), P(-1, 1, 0), P(0, 1, 1))
    assert pts["V2"] == P(0, 1, 0)
    assert pts["V23"] == P(0, 1, -1)
    assert pts["V1"] == P(1, 0, 0)
    assert pts["V3"] == P(0, 0, 1)
    assert pts["V12"] == P(-1, 1, 0)


def test_frame_subterms_degenerate():
    assert frame_points(P(1, 0, 0), P(1, 0, 0), P(0, 1, 1))["V2"] is None
    # collinear A, B, C: all on the line z = 0
    assert frame_points(P(1, 0, 0), P(1, 1, 0), P(0, 1, 0))["V3"] is None


@given(rationals, rationals, rationals)
def test_frame_from_points_on_rotated_bases(p, q, r):
    basis = rational_rotation(p, q, r).rows
    pts = observation_points(basis)
    f = frame_from_points(pts["A"], pts["B"], pts["C"])
    assert f.points() == frame_from_basis(basis).points()


# --- witness transport ------------------------------------------------------

@pytest.mark.parametrize("poly,roots", [
    ("X", {"X": 0}),
    ("(X1 + X2) * X1 - 1", {"X1": 1, "X2": 0}),
    ("X*X*X - 8", {"X": 2}),
    ("X*Y - 1", {"X": -3, "Y": Fraction(-1, 3)}),
])
def test_round_trip(poly, roots):
    inst = compile_constant_free(rt.parse_poly(poly))
    w = witness_from_root(roots, inst)
    assert verify_witness(inst.to_problem(), w)
    assert root_from_witness(w, inst) == roots


@given(rationals, rationals, rationals, st.integers(-4, 4))
def test_round_trip_rotated_frame(p, q, r, root):
    inst = compile_constant_free(rt.parse_poly("X*X - 2*X*Y + Y*Y"))
    basis = rational_rotation(p, q, r).rows
    w = witness_from_root({"X": root, "Y": root}, inst, basis=basis)
    assert root_from_witness(w, inst) == {"X": root, "Y": root}


def test_round_trip_with_constants_frame():
    f = random_frame(random.Random(5))
    inst = compile_equation(rt.parse_poly("X*X - 2"), f)
    r, _ = adjoin_sqrt(2)
    assert root_from_witness(witness_from_root({"X": -r}, inst), inst) == {"X": -r}


def test_transport_errors():
    inst = compile_constant_free(rt.parse_poly("X*X - 1"))
    with pytest.raises(NotARoot):
        witness_from_root({"X": 2}, inst)
    with pytest.raises(NotARoot):
        witness_from_root({}, inst)
    w = witness_from_root({"X": 1}, inst)
    bad = Witness(dict(w.assignment, X=theta_encode(3, standard_frame())))
    with pytest.raises(InvalidWitness):
        root_from_witness(bad, inst)


def test_general_point_decodes_through_iota():
    # X = F(v1 - r v2 + s v3) is not itself an encoding but still decodes to r
    inst = compile_constant_free(rt.parse_poly("X*X - 1"))
    w = witness_from_root({"X": 1}, inst)
    w.assignment["X"] = P(1, -1, 5)
    assert root_from_witness(w, inst) == {"X": 1}


def test_search_witness_decodes():
    inst = compile_constant_free(rt.parse_poly("X*X - 1"))
    res = brute_search(inst.to_problem(), SearchConfig(bound=1))
    assert res.found
    assert root_from_witness(res.witness, inst)["X"] in (1, -1)


@pytest.mark.parametrize("poly", ["1", "X*X + 1", "0*X + 1"])
def test_unsatisfiable_stay_unsatisfiable(poly):
    # without the whole frame forced to be defined, degenerate A, B, C would satisfy these
    inst = compile_constant_free(rt.parse_poly(poly))
    res = brute_search(inst.to_problem(), SearchConfig(bound=1))
    assert res.verdict == "exhausted"


def test_system_compilation():
    inst = compile_system([rt.parse_poly("X - 1"), rt.parse_poly("Y - X")])
    w = witness_from_root({"X": 1, "Y": 1}, inst)
    assert root_from_witness(w, inst) == {"X": 1, "Y": 1}
    with pytest.raises(NotARoot):
        witness_from_root({"X": 1, "Y": 2}, inst)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 4), st.integers(0, 10 ** 9))
def test_size_bound(size, n_vars, seed):
    p = rt.random_ring_term(size, n_vars, seed, "integer")
    inst = compile_constant_free(p)
    assert inst.size() <= SIZE_CONSTANT * rt.description_size(p)
    assert constant_leaves(inst.lhs) == 0


def test_decode_error_on_degenerate_frame():
    inst = compile_constant_free(rt.parse_poly("X"))
    f = standard_frame()
    w = Witness({"A": f.V1, "B": f.V1, "C": P(0, 1, 1), "X": f.V1})
    with pytest.raises((InvalidWitness, DecodeError)):
        root_from_witness(w, inst)
