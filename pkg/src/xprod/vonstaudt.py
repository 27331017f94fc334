"""Ring arithmetic by cross products: the polynomial-to-XSAT compiler.

A *frame* is an orthogonal basis ``v1, v2, v3`` together with the points

    V1 = F v1   V2 = F v2   V3 = F v3   V12 = F(v1 - v2)   V23 = F(v2 - v3)

and a field element ``r`` is encoded as the point ``theta(r) = F(v1 - r v2)``.
The gadgets below build, from terms evaluating to ``theta(r)`` and
``theta(s)``, terms evaluating to ``theta(r*s)``, ``theta(r-s)`` and
``theta(r+s)``.  ``iota`` maps every point off the V2-V3 plane onto the
encoding of its slope.  Frames can be supplied as projective constants or
synthesized from three free points ``A, B, C``; the latter gives a compiled
equation ``t''' = A`` without any constants.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .exactfield import (
    E1, E2, E3, ProjPoint, Scalar, Vec3, cross, format_scalar, orthogonal_basis,
    sdiv, sign,
)
from .problems import ProblemInstance, Witness, verify_witness
from . import ringterms as rt
from .terms import (
    Cross, CrossTerm, ProjConst, Var, dag_size, eval_projective,
    postorder, print_term, variables,
)

log = logging.getLogger(__name__)

# size(t''') <= SIZE_CONSTANT * description_size(p); measured bound is checked by the tests
SIZE_CONSTANT = 64


class DegenerateFrame(ValueError):
    pass


class NotARoot(ValueError):
    pass


class InvalidWitness(ValueError):
    pass


class DecodeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class Frame:
    basis: Tuple[Vec3, Vec3, Vec3]

    @property
    def V1(self) -> ProjPoint:
        return ProjPoint(self.basis[0])

    @property
    def V2(self) -> ProjPoint:
        return ProjPoint(self.basis[1])

    @property
    def V3(self) -> ProjPoint:
        return ProjPoint(self.basis[2])

    @property
    def V12(self) -> ProjPoint:
        return ProjPoint(self.basis[0] - self.basis[1])

    @property
    def V23(self) -> ProjPoint:
        return ProjPoint(self.basis[1] - self.basis[2])

    @property
    def V13(self) -> ProjPoint:
        return ProjPoint(self.basis[0] - self.basis[2])

    def points(self) -> Dict[str, ProjPoint]:
        return {"V1": self.V1, "V2": self.V2, "V3": self.V3, "V12": self.V12, "V23": self.V23}


def frame_from_basis(basis: Sequence[Vec3]) -> Frame:
    v1, v2, v3 = (b if isinstance(b, Vec3) else Vec3.of(b) for b in basis)
    if v1.is_zero() or v2.is_zero() or v3.is_zero():
        raise ValueError("basis vectors must be nonzero")
    if v1.dot(v2) != 0 or v2.dot(v3) != 0 or v1.dot(v3) != 0:
        raise ValueError("basis vectors are not pairwise orthogonal")
    if sign(v1.dot(cross(v2, v3))) < 0:
        v1, v2, v3 = -v1, -v2, -v3
    return Frame((v1, v2, v3))


def standard_frame() -> Frame:
    return Frame((E1, E2, E3))


def random_frame(rng: random.Random, spread: int = 6) -> Frame:
    """Frame of a random rational rotation with random nonzero row scales."""
    def q() -> Fraction:
        return Fraction(rng.randint(-spread, spread), rng.randint(1, spread))

    def nz() -> Fraction:
        return Fraction(rng.choice([-1, 1]) * rng.randint(1, spread), rng.randint(1, spread))

    return frame_from_basis(orthogonal_basis((q(), q(), q()), (nz(), nz(), nz())))


def theta_encode(r: Scalar, frame: Frame) -> ProjPoint:
    v1, v2, _ = frame.basis
    return ProjPoint(v1 - v2 * r)


def theta_decode(point: ProjPoint, frame: Frame) -> Optional[Scalar]:
    """``r`` with ``theta(r) = point``, or ``None`` when the point is not an encoding."""
    v1, v2, v3 = frame.basis
    p = point.rep
    if p.dot(v3) != 0:
        return None
    alpha = sdiv(p.dot(v1), v1.dot(v1))
    if alpha == 0:
        return None
    beta = sdiv(p.dot(v2), v2.dot(v2))
    r = -sdiv(beta, alpha)
    if isinstance(r, Fraction) and r.denominator == 1:
        r = r.numerator
    return r


def frame_from_points(A: ProjPoint, B: ProjPoint, C: ProjPoint) -> Frame:
    """Recover the orthogonal basis behind the synthesized frame of ``A, B, C``.

    All five frame points must be defined; then ``V1 = A`` and the basis is
    rescaled so that ``B = F(v1 - v2)`` and ``C x A = F(v2 - v3)``.
    """
    pts = frame_points(A, B, C)
    missing = [k for k, v in pts.items() if v is None]
    if missing:
        raise DegenerateFrame(f"frame points undefined: {', '.join(missing)}")
    if pts["V1"] != A:
        raise DegenerateFrame("V1 differs from A")
    v1 = A.rep
    w2 = pts["V2"].rep
    w3 = pts["V3"].rep
    b = B.rep
    alpha, beta = sdiv(b.dot(v1), v1.dot(v1)), sdiv(b.dot(w2), w2.dot(w2))
    v2 = w2 * (-sdiv(beta, alpha))
    c = pts["V23"].rep
    gamma, delta = sdiv(c.dot(v2), v2.dot(v2)), sdiv(c.dot(w3), w3.dot(w3))
    v3 = w3 * (-sdiv(delta, gamma))
    frame = frame_from_basis((v1, v2, v3))
    if frame.V12 != B or frame.V23 != pts["V23"]:
        raise DegenerateFrame("frame reconstruction is inconsistent")
    return frame


def frame_points(A: ProjPoint, B: ProjPoint, C: ProjPoint) -> Dict[str, Optional[ProjPoint]]:
    """Values of the synthesized frame terms (``None`` where undefined)."""
    refs = frame_subterms(Var("A"), Var("B"), Var("C"))
    assign = {"A": A, "B": B, "C": C}
    return {k: eval_projective(getattr(refs, k), assign)
            for k in ("V1", "V2", "V3", "V12", "V23")}


def observation_points(basis: Optional[Sequence[Vec3]] = None) -> Dict[str, ProjPoint]:
    """``A = F v1, B = F(v2 - v1), C = F(v2 + v3)`` for an orthonormal basis."""
    v1, v2, v3 = basis if basis is not None else (E1, E2, E3)
    return {"A": ProjPoint(v1), "B": ProjPoint(v2 - v1), "C": ProjPoint(v2 + v3)}


# ---------------------------------------------------------------------------
# gadgets


@dataclass
class FrameRefs:
    """Terms standing for the five frame points (constants or sub-terms)."""

    V1: CrossTerm
    V2: CrossTerm
    V3: CrossTerm
    V12: CrossTerm
    V23: CrossTerm
    V13: CrossTerm = field(init=False)

    def __post_init__(self):
        self.V13 = Cross(self.V2, Cross(self.V12, self.V23))


def frame_constants(frame: Frame) -> FrameRefs:
    return FrameRefs(ProjConst(frame.V1), ProjConst(frame.V2), ProjConst(frame.V3),
                     ProjConst(frame.V12), ProjConst(frame.V23))


def frame_subterms(A: CrossTerm, B: CrossTerm, C: CrossTerm) -> FrameRefs:
    """The frame synthesized from three points, with shared sub-terms."""
    V12 = B
    V2 = Cross(Cross(A, B), A)
    V23 = Cross(C, A)
    V1 = Cross(V2, V23)
    V3 = Cross(Cross(V23, Cross(B, V2)), B)
    return FrameRefs(V1=V1, V2=V2, V3=V3, V12=V12, V23=V23)


def to_v1_v3(S: CrossTerm, f: FrameRefs) -> CrossTerm:
    """``theta(s) -> F(v1 - s v3)``."""
    return Cross(f.V2, Cross(f.V23, S))


def to_v3_v2(R: CrossTerm, f: FrameRefs) -> CrossTerm:
    """``theta(r) -> F(v3 - r v2)``."""
    return Cross(f.V1, Cross(f.V13, R))


def gadget_mul(R: CrossTerm, S: CrossTerm, f: FrameRefs) -> CrossTerm:
    return Cross(f.V3, Cross(to_v3_v2(R, f), to_v1_v3(S, f)))


def gadget_sub(R: CrossTerm, S: CrossTerm, f: FrameRefs) -> CrossTerm:
    inner = Cross(Cross(f.V23, R), Cross(f.V2, to_v1_v3(S, f)))
    return Cross(f.V3, Cross(inner, f.V3))


def gadget_add(R: CrossTerm, S: CrossTerm, f: FrameRefs) -> CrossTerm:
    # r + s = r - (0 - s)
    return gadget_sub(R, gadget_sub(f.V1, S, f), f)


def iota(W: CrossTerm, f: FrameRefs) -> CrossTerm:
    """Defined exactly off the V2-V3 plane, where it equals ``theta(slope)``."""
    w3 = Cross(W, f.V3)
    return Cross(w3, Cross(Cross(w3, f.V3), f.V2))


def integer_term(n: int, f: FrameRefs, cache: Optional[Dict[int, CrossTerm]] = None) -> CrossTerm:
    """``theta(n)`` from the frame alone: 0 is V1, 1 is V12, the rest by doubling."""
    if cache is None:
        cache = {}
    if n in cache:
        return cache[n]
    if n == 0:
        out = f.V1
    elif n == 1:
        out = f.V12
    elif n < 0:
        out = gadget_sub(f.V1, integer_term(-n, f, cache), f)
    else:
        half = integer_term(n // 2, f, cache)
        out = gadget_add(half, half, f)
        if n & 1:
            out = gadget_add(out, f.V12, f)
    cache[n] = out
    return out


def compile_ring_term(p: rt.RingTerm, f: FrameRefs,
                      leaf: Callable[[str], CrossTerm],
                      const: Callable[[Scalar], CrossTerm]) -> CrossTerm:
    """Structural translation of ``p``; variables and constants go through the callbacks."""
    out: Dict[int, CrossTerm] = {}
    for node in rt._postorder(p):
        if isinstance(node, rt.Var):
            out[id(node)] = leaf(node.name)
        elif isinstance(node, rt.Const):
            out[id(node)] = const(node.value)
        else:
            l, r = out[id(node.left)], out[id(node.right)]
            if isinstance(node, rt.Add):
                out[id(node)] = gadget_add(l, r, f)
            elif isinstance(node, rt.Sub):
                out[id(node)] = gadget_sub(l, r, f)
            else:
                out[id(node)] = gadget_mul(l, r, f)
    return out[id(p)]


def compile_with_constants(p: rt.RingTerm, frame: Frame) -> CrossTerm:
    """``t_p``: ``t_p(theta(x1), ..., theta(xn)) = theta(p(x1, ..., xn))``."""
    refs = frame_constants(frame)
    vars_: Dict[str, CrossTerm] = {}
    return compile_ring_term(p, refs, lambda n: vars_.setdefault(n, Var(n)),
                             lambda c: ProjConst(theta_encode(c, frame)))


# ---------------------------------------------------------------------------
# equations


@dataclass
class XsatInstance:
    """A projective equation ``lhs = rhs`` produced by the compiler."""

    lhs: CrossTerm
    rhs: CrossTerm
    poly: rt.RingTerm
    poly_vars: List[str]
    frame: Optional[Frame] = None
    frame_vars: Optional[Tuple[str, str, str]] = None
    mode: str = "projective"

    @property
    def constant_free(self) -> bool:
        return self.frame_vars is not None

    @property
    def vars(self) -> List[str]:
        names = dict.fromkeys(variables(self.lhs))
        names.update(dict.fromkeys(variables(self.rhs)))
        return list(names)

    def to_problem(self) -> ProblemInstance:
        consts = "forbidden" if self.constant_free else "allowed"
        if isinstance(self.rhs, Var):
            return ProblemInstance("XSAT", self.mode, (self.lhs,), consts, self.rhs.name)
        return ProblemInstance("XSAT", self.mode, (self.lhs, self.rhs), consts)

    def to_json(self) -> dict:
        return {"lhs": print_term(self.lhs), "rhs": print_term(self.rhs), "mode": self.mode,
                "vars": self.vars, "poly": rt.print_poly(self.poly)}

    def size(self) -> int:
        return dag_size(self.lhs)


def compile_equation(p: rt.RingTerm, frame: Frame) -> XsatInstance:
    """``t'_p = V1``: variables enter through ``iota`` so any solution encodes a root."""
    refs = frame_constants(frame)
    leaves: Dict[str, CrossTerm] = {}

    def leaf(name: str) -> CrossTerm:
        if name not in leaves:
            leaves[name] = iota(Var(name), refs)
        return leaves[name]

    lhs = compile_ring_term(p, refs, leaf, lambda c: ProjConst(theta_encode(c, frame)))
    return XsatInstance(lhs, refs.V1, p, rt.poly_variables(p), frame=frame)


def _fresh_names(taken, wanted=("A", "B", "C")) -> Tuple[str, ...]:
    out = []
    for base in wanted:
        name, i = base, 0
        while name in taken or name in out:
            i += 1
            name = f"{base}{i}"
        out.append(name)
    return tuple(out)


def compile_constant_free(p: rt.RingTerm) -> XsatInstance:
    """``t'''_p = A`` over the variables of ``p`` and three fresh frame variables.

    Integer constants are spelled out from ``0 = V1`` and ``1 = V12``.  When
    the compiled term does not already contain both ``V1`` and ``V3`` it is
    wrapped as ``lhs - 0``, which forces the whole frame to be defined.
    """
    for c in rt.constants(p):
        if not (isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1)):
            raise rt.DisallowedConstant(
                f"constant {format_scalar(c)} cannot be built from 0 and +-1")
    pvars = rt.poly_variables(p)
    a, b, c = _fresh_names(set(pvars))
    refs = frame_subterms(Var(a), Var(b), Var(c))
    ints: Dict[int, CrossTerm] = {}
    leaves: Dict[str, CrossTerm] = {}

    def leaf(name: str) -> CrossTerm:
        if name not in leaves:
            leaves[name] = iota(Var(name), refs)
        return leaves[name]

    lhs = compile_ring_term(p, refs, leaf, lambda v: integer_term(int(v), refs, ints))
    reached = {id(n) for n in postorder(lhs)}
    if id(refs.V1) not in reached or id(refs.V3) not in reached:
        lhs = gadget_sub(lhs, refs.V1, refs)
    return XsatInstance(lhs, Var(a), p, pvars, frame_vars=(a, b, c))


def compile_system(polys: Sequence[rt.RingTerm], constant_free: bool = True,
                   frame: Optional[Frame] = None) -> XsatInstance:
    """Common root of a system, via the single equation ``sum p_i^2 = 0``."""
    p = rt.sum_of_squares(polys)
    if constant_free:
        return compile_constant_free(p)
    return compile_equation(p, frame or standard_frame())


# ---------------------------------------------------------------------------
# witness transport


def witness_from_root(roots: Mapping[str, Scalar], inst: XsatInstance,
                      basis: Optional[Sequence[Vec3]] = None) -> Witness:
    """Assignment satisfying ``inst`` built from a root of its polynomial.

    For constant-free instances ``A, B, C`` are placed on the orthonormal
    ``basis`` (default: the standard one) and ``X = theta(r)`` in that frame.
    """
    roots = dict(roots)
    missing = [v for v in inst.poly_vars if v not in roots]
    if missing:
        raise NotARoot(f"no value for {', '.join(missing)}")
    if rt.eval_poly(inst.poly, roots) != 0:
        raise NotARoot("the given values are not a root of the polynomial")
    assignment: Dict[str, ProjPoint] = {}
    if inst.constant_free:
        pts = observation_points(basis)
        frame = frame_from_basis(basis) if basis is not None else standard_frame()
        for name, key in zip(inst.frame_vars, ("A", "B", "C")):
            assignment[name] = pts[key]
    else:
        frame = inst.frame
    for v in inst.poly_vars:
        assignment[v] = theta_encode(roots[v], frame)
    w = Witness(assignment, {v: roots[v] for v in inst.poly_vars})
    verdict = verify_witness(inst.to_problem(), w)
    if not verdict:
        raise AssertionError(f"root did not yield a satisfying assignment: {verdict.reason}")
    return w


def root_from_witness(w: Witness, inst: XsatInstance) -> Dict[str, Scalar]:
    """Decode the root of ``inst.poly`` carried by a satisfying assignment."""
    verdict = verify_witness(inst.to_problem(), w)
    if not verdict:
        raise InvalidWitness(f"assignment does not satisfy the equation: {verdict.reason}")
    assign = {k: (v if isinstance(v, ProjPoint) else ProjPoint(v)) for k, v in w.assignment.items()}
    if inst.constant_free:
        a, b, c = inst.frame_vars
        try:
            frame = frame_from_points(assign[a], assign[b], assign[c])
        except DegenerateFrame as exc:
            raise DecodeError(str(exc)) from None
    else:
        frame = inst.frame
    refs = frame_constants(frame)
    roots: Dict[str, Scalar] = {}
    for v in inst.poly_vars:
        image = eval_projective(iota(Var(v), refs), {v: assign[v]})
        r = None if image is None else theta_decode(image, frame)
        if r is None:
            raise DecodeError(f"{v} is not normalized to an encoding")
        roots[v] = r
    if rt.eval_poly(inst.poly, roots) != 0:
        raise DecodeError("decoded values are not a root")
    return roots


# ---------------------------------------------------------------------------
# identity suites


def _rand_q(rng: random.Random, spread: int = 20) -> Fraction:
    return Fraction(rng.randint(-spread, spread), rng.randint(1, spread // 2 or 1))


@dataclass
class SuiteReport:
    name: str
    cases: int = 0
    failures: List[str] = field(default_factory=list)
    undefined: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = f", {self.undefined} undefined" if self.undefined else ""
        return (f"{status} {self.name}: {self.cases} cases, {len(self.failures)} failures"
                f"{extra} ({self.seconds:.1f}s)")


def gadget_identities(frame: Frame, r: Scalar, s: Scalar) -> List[str]:
    """Check every gadget identity at ``(frame, r, s)``; returns the names that fail.

    Left sides are formed directly from basis vectors; right sides are terms
    over projective constants run through the evaluator.
    """
    v1, v2, v3 = frame.basis
    f = frame_constants(frame)
    P = lambda v: ProjConst(ProjPoint(v))  # noqa: E731
    ev = lambda t: eval_projective(t, {})  # noqa: E731
    th = lambda x: theta_encode(x, frame)  # noqa: E731
    bad = []

    def check(name, lhs, term):
        if ev(term) != lhs:
            bad.append(name)

    check("a", ProjPoint(v1 - v2 * (r * s)),
          Cross(f.V3, Cross(P(v3 - v2 * r), P(v1 - v3 * s))))
    check("b", ProjPoint(v1 - v3 * s), Cross(f.V2, Cross(f.V23, P(v1 - v2 * s))))
    check("c", ProjPoint(v3 - v2 * r),
          Cross(f.V1, Cross(ProjConst(frame.V13), P(v1 - v2 * r))))
    check("d", th(r - s),
          Cross(f.V3, Cross(Cross(Cross(f.V23, P(v1 - v2 * r)),
                                  Cross(f.V2, P(v1 - v3 * s))), f.V3)))
    check("e", frame.V13, Cross(f.V2, Cross(f.V12, f.V23)))
    # iota: general point, fixed point, and the V2-V3 plane
    check("f-general", th(r), iota(P(v1 - v2 * r + v3 * s), f))
    check("f-fixed", th(r), iota(ProjConst(th(r)), f))
    plane = v2 * r + v3 * s if (r != 0 or s != 0) else v2 + v3
    if ev(iota(P(plane), f)) is not None:
        bad.append("f-plane")
    R, S = ProjConst(th(r)), ProjConst(th(s))
    check("mul", th(r * s), gadget_mul(R, S, f))
    check("sub", th(r - s), gadget_sub(R, S, f))
    check("add", th(r + s), gadget_add(R, S, f))
    check("compose", th(r * s - 1), gadget_sub(gadget_mul(R, S, f), f.V12, f))
    return bad


def gadget_suite(n_frames: int = 1000, seed: int = 0) -> SuiteReport:
    rng = random.Random(seed)
    report = SuiteReport("gadget identities")
    start = time.perf_counter()
    for i in range(n_frames):
        frame = random_frame(rng)
        r, s = _rand_q(rng), _rand_q(rng)
        report.cases += 1
        for name in gadget_identities(frame, r, s):
            report.failures.append(f"frame #{i} r={r} s={s}: {name}")
    report.seconds = time.perf_counter() - start
    return report


def commutation_suite(n_terms: int = 500, points: int = 5, seed: int = 0,
                      max_size: int = 30, max_vars: int = 4) -> SuiteReport:
    """``t_p(theta(x)) = theta(p(x))`` on random ring terms, frames and rational points."""
    rng = random.Random(seed)
    report = SuiteReport("encoding commutes with compilation")
    start = time.perf_counter()
    for i in range(n_terms):
        n_vars = rng.randint(1, max_vars)
        p = rt.random_ring_term(rng.randint(1, max_size), n_vars, rng.random(), mode="rational")
        frame = random_frame(rng) if i % 2 else standard_frame()
        t = compile_with_constants(p, frame)
        names = rt.poly_variables(p)
        for _ in range(points):
            x = {n: _rand_q(rng, 8) for n in names}
            report.cases += 1
            lhs = eval_projective(t, {n: theta_encode(x[n], frame) for n in names})
            if lhs is None:
                report.undefined += 1
                log.warning("undefined compiled term: p=%s x=%s", rt.print_poly(p), x)
                continue
            if lhs != theta_encode(rt.eval_poly(p, x), frame):
                report.failures.append(f"term #{i} p={rt.print_poly(p)} x={x}")
    report.seconds = time.perf_counter() - start
    if report.cases and report.undefined / report.cases >= 0.01:
        report.failures.append(f"undefined rate {report.undefined}/{report.cases} >= 1%")
    return report
