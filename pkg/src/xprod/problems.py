"""Decision-problem instances over cross terms, witness checking and transports.

Four kinds in two flavours each::

    XNONTRIV   some assignment makes t nonzero (affine) / defined (projective)
    XUVEC      some affine assignment makes t equal to e3 = (0, 0, 1)
    XNONEQUIV  some projective assignment makes s and t defined and distinct
    XSAT       t equals its designated variable (nonzero in the affine case)

The transports convert accepted witnesses of one instance into accepted
witnesses of the reduced instance, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .exactfield import (
    E1, E2, E3, IncompatibleTowers, Mat3, ProjPoint, QuadExt, Scalar, Tower, Vec3, adjoin_sqrt,
    as_scalar, cross, format_scalar, parse_projpoint, parse_vec3, sdiv, spow,
)
from .terms import (
    AffineConst, CrossTerm, Cross, ProjConst, UnboundVariable, Var, constant_leaves,
    eval_affine, eval_projective, multidegree, parse_term, print_term, variables,
)

KINDS = ("XNONTRIV", "XUVEC", "XNONEQUIV", "XSAT")
MODES = ("affine", "projective")


@dataclass(frozen=True)
class ProblemInstance:
    """One instance; ``terms`` is ``(t,)``, ``(s, t)`` for XNONEQUIV, and for
    XSAT either ``(lhs,)`` with a designated variable or ``(lhs, rhs)``."""

    kind: str
    mode: str
    terms: Tuple[CrossTerm, ...]
    constants: str = "forbidden"
    designated: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.constants not in ("allowed", "forbidden"):
            raise ValueError("constants must be 'allowed' or 'forbidden'")
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        want = {"XNONTRIV": (1,), "XUVEC": (1,), "XNONEQUIV": (2,), "XSAT": (1, 2)}[self.kind]
        if len(terms) not in want:
            raise ValueError(f"{self.kind} takes {want} terms, got {len(terms)}")
        if self.kind == "XUVEC" and self.mode != "affine":
            raise ValueError("XUVEC is an affine problem")
        if self.kind == "XNONEQUIV" and self.mode != "projective":
            raise ValueError("XNONEQUIV is a projective problem")
        if self.kind == "XSAT" and len(terms) == 1:
            names = variables(terms[0])
            if self.designated is None:
                if not names:
                    raise ValueError("XSAT term has no variable to designate")
                object.__setattr__(self, "designated", names[0])
            elif self.designated not in names:
                raise ValueError(f"designated variable {self.designated!r} does not occur")
        if self.constants == "forbidden" and any(constant_leaves(t) for t in terms):
            raise ValueError("constant leaves in a constant-free instance")

    @property
    def variables(self) -> List[str]:
        names: Dict[str, None] = {}
        for t in self.terms:
            for n in variables(t):
                names.setdefault(n)
        return list(names)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "mode": self.mode, "constants": self.constants,
               "terms": [print_term(t) for t in self.terms]}
        if self.designated is not None:
            out["designated"] = self.designated
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ProblemInstance":
        if "lhs" in obj:
            # compiled-instance layout {"lhs", "rhs", "mode", "vars"}
            lhs = parse_term(obj["lhs"])
            rhs = parse_term(obj["rhs"])
            constants = "allowed" if constant_leaves(lhs) or constant_leaves(rhs) else "forbidden"
            if isinstance(rhs, Var):
                return cls("XSAT", obj.get("mode", "projective"), (lhs,), constants, rhs.name)
            return cls("XSAT", obj.get("mode", "projective"), (lhs, rhs), constants)
        return cls(obj["kind"], obj["mode"], tuple(parse_term(t) for t in obj["terms"]),
                   obj.get("constants", "forbidden"), obj.get("designated"))


Point = Union[Vec3, ProjPoint]


@dataclass
class Witness:
    assignment: Dict[str, Point]
    roots: Optional[Dict[str, Scalar]] = None

    def to_json(self) -> dict:
        out: dict = {"assignment": {k: str(v) for k, v in self.assignment.items()}}
        if self.roots is not None:
            out["roots"] = {k: format_scalar(v) for k, v in self.roots.items()}
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "Witness":
        assignment: Dict[str, Point] = {}
        for name, text in obj["assignment"].items():
            text = text.strip()
            assignment[name] = parse_projpoint(text) if text.startswith("<") else parse_vec3(text)
        roots = obj.get("roots")
        if roots is not None:
            roots = {k: as_scalar(v) for k, v in roots.items()}
        return cls(assignment, roots)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.accepted

    def to_json(self) -> dict:
        return {"verdict": "accept" if self.accepted else "reject", "reason": self.reason}


ACCEPT = Verdict(True, "accept")


def _reject(reason: str) -> Verdict:
    return Verdict(False, reason)


def _affine_assignment(w: Witness) -> Dict[str, Vec3]:
    out = {}
    for k, v in w.assignment.items():
        out[k] = v.rep if isinstance(v, ProjPoint) else v
    return out


def _projective_assignment(w: Witness) -> Optional[Dict[str, ProjPoint]]:
    out = {}
    for k, v in w.assignment.items():
        if isinstance(v, ProjPoint):
            out[k] = v
        elif v.is_zero():
            return None
        else:
            out[k] = ProjPoint(v)
    return out


def verify_witness(inst: ProblemInstance, w: Witness) -> Verdict:
    """Exact check of the instance's defining predicate."""
    try:
        if inst.mode == "affine":
            return _verify_affine(inst, _affine_assignment(w))
        assignment = _projective_assignment(w)
        if assignment is None:
            return _reject("zero vector in projective assignment")
        return _verify_projective(inst, assignment)
    except UnboundVariable as exc:
        return _reject(f"unbound variable {exc.args[0]}")
    except IncompatibleTowers as exc:
        return _reject(f"incompatible fields: {exc}")


def _verify_affine(inst: ProblemInstance, a: Mapping[str, Vec3]) -> Verdict:
    value = eval_affine(inst.terms[0], a)
    if inst.kind == "XNONTRIV":
        return _reject("zero value") if value.is_zero() else ACCEPT
    if inst.kind == "XUVEC":
        return ACCEPT if value == E3 else _reject("wrong value")
    # XSAT
    if len(inst.terms) == 2:
        target = eval_affine(inst.terms[1], a)
    else:
        target = a[inst.designated]
    if target.is_zero():
        return _reject("zero v1")
    return ACCEPT if value == target else _reject("wrong value")


def _verify_projective(inst: ProblemInstance, a: Mapping[str, ProjPoint]) -> Verdict:
    values = [eval_projective(t, a) for t in inst.terms]
    if any(v is None for v in values):
        return _reject("undefined")
    if inst.kind == "XNONTRIV":
        return ACCEPT
    if inst.kind == "XNONEQUIV":
        return ACCEPT if values[0] != values[1] else _reject("equivalent")
    target = values[1] if len(values) == 2 else a[inst.designated]
    return ACCEPT if values[0] == target else _reject("wrong value")


# ---------------------------------------------------------------------------
# XNONEQUIV <-> XNONTRIV


@dataclass(frozen=True)
class TrivialVariableCase:
    """A leaf instance of XNONTRIV: nontrivial without any splitting."""

    term: CrossTerm


def nonequiv_to_nontriv(s: CrossTerm, t: CrossTerm, mode: str = "projective") -> ProblemInstance:
    """``s`` and ``t`` differ somewhere iff ``s x t`` is nontrivial (on nonzero vectors)."""
    consts = "allowed" if constant_leaves(s) or constant_leaves(t) else "forbidden"
    return ProblemInstance("XNONTRIV", mode, (Cross(s, t),), consts)


def nontriv_to_nonequiv(t: CrossTerm) -> Union[ProblemInstance, TrivialVariableCase]:
    if not isinstance(t, Cross):
        return TrivialVariableCase(t)
    consts = "allowed" if constant_leaves(t) else "forbidden"
    return ProblemInstance("XNONEQUIV", "projective", (t.left, t.right), consts)


def nonequiv_witness_to_nontriv(w: Witness, mode: str = "projective") -> Witness:
    if mode == "projective":
        return Witness(dict(w.assignment))
    return Witness({k: (v.rep if isinstance(v, ProjPoint) else v) for k, v in w.assignment.items()})


def nontriv_witness_to_nonequiv(w: Witness) -> Optional[Witness]:
    """Affine or projective XNONTRIV witness of ``s x t`` as an XNONEQUIV witness.

    Returns ``None`` for affine witnesses using the zero vector, which have no
    projective counterpart.
    """
    a = _projective_assignment(w)
    return None if a is None else Witness(a)


# ---------------------------------------------------------------------------
# XNONTRIV -> XUVEC


class NotConstructible(ValueError):
    """The transport needs a root that quadratic towers cannot supply."""


@dataclass
class XuvecTransport:
    witness: Witness
    rotation: Mat3
    scales: Dict[str, Scalar]
    tower: Tower


def _xgcd_combination(degrees: Sequence[int]) -> Tuple[int, List[int]]:
    """``g = gcd(degrees)`` and integers ``c`` with ``sum(c*d) = g``."""
    g, coeffs = degrees[0], [1] + [0] * (len(degrees) - 1)
    for i in range(1, len(degrees)):
        d = degrees[i]
        # extended Euclid on (g, d)
        old_r, r, old_s, s_, old_t, t_ = g, d, 1, 0, 0, 1
        while r:
            q = old_r // r
            old_r, r = r, old_r - q * r
            old_s, s_ = s_, old_s - q * s_
            old_t, t_ = t_, old_t - q * t_
        coeffs = [c * old_s for c in coeffs]
        coeffs[i] = old_t
        g = old_r
    return g, coeffs


def _unit_completion(u: Vec3, tower: Tower) -> Tuple[Mat3, Tower]:
    """Rotation with last row ``u/|u|`` (rows ``a/|a|, u x a/(|u||a|), u/|u|``)."""
    norm_u, tower = adjoin_sqrt(u.dot(u), tower)
    axis = next(e for e in (E1, E2, E3) if not cross(e, u).is_zero())
    a = cross(axis, u)
    norm_a, tower = adjoin_sqrt(a.dot(a), tower)
    r1 = a * sdiv(1, norm_a)
    r2 = cross(u, a) * sdiv(1, norm_u * norm_a)
    r3 = u * sdiv(1, norm_u)
    return Mat3((r1, r2, r3)), tower


def xuvec_from_nontriv(t: CrossTerm, w: Witness) -> XuvecTransport:
    """Turn an affine witness with value ``u != 0`` into one with value ``e3``.

    Variables are rescaled so that the value becomes a unit vector (only square
    roots of ``u . u`` are adjoined, nested when the degrees share a factor 2),
    then every argument is rotated by ``O`` with ``O u/|u| = e3``.
    """
    a = _affine_assignment(w)
    u = eval_affine(t, a)
    if u.is_zero():
        raise ValueError("witness does not make the term nonzero")
    if u == E3:
        return XuvecTransport(Witness(dict(a)), Mat3.identity(), {}, u.tower)
    deg = {k: d for k, d in multidegree(t).items() if d > 0}
    if not deg:
        raise NotConstructible("term has no variable leaf; its value cannot be rescaled")
    names = sorted(deg, key=lambda k: (deg[k], k))
    g, coeffs = _xgcd_combination([deg[k] for k in names])
    single = next((k for k in names if deg[k] == g), None)
    if single is not None:
        coeffs = [1 if k == single else 0 for k in names]
    if g & (g - 1):
        raise NotConstructible(
            f"needs a {g}-th root of |u|: degrees {sorted(deg.values())} share an odd factor")
    # root = n^(1/(2g)) with n = u.u, by nested square roots
    tower = u.tower
    root, tower = adjoin_sqrt(u.dot(u), tower)
    steps = g
    while steps > 1:
        root, tower = adjoin_sqrt(root, tower)
        steps //= 2
    scales: Dict[str, Scalar] = {}
    scaled = dict(a)
    for k, c in zip(names, coeffs):
        if c:
            lam = spow(root, -c)
            scales[k] = lam
            scaled[k] = a[k] * lam
    unit = eval_affine(t, scaled)
    if unit.dot(unit) != 1:
        raise AssertionError("rescaling did not produce a unit vector")
    if unit == E3:
        return XuvecTransport(Witness(scaled), Mat3.identity(), scales, tower)
    rot, tower = _unit_completion(unit, tower)
    rotated = {k: rot @ v for k, v in scaled.items()}
    return XuvecTransport(Witness(rotated), rot, scales, tower)


# ---------------------------------------------------------------------------
# projective XSAT -> affine XSAT


def _fresh(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def cubic_frame_term(s: CrossTerm, w: CrossTerm) -> CrossTerm:
    """``((w x (s x w)) x s) x (s x (s x w))``: a multiple of ``s`` cubic in ``w``."""
    sw = Cross(s, w)
    return Cross(Cross(Cross(w, sw), s), Cross(s, sw))


def projective_to_affine_xsat(inst: ProblemInstance) -> Tuple[ProblemInstance, str]:
    if inst.kind != "XSAT" or inst.mode != "projective" or inst.designated is None:
        raise ValueError("expected a projective XSAT instance with a designated variable")
    fresh = _fresh("W", set(inst.variables))
    s = _affinize(inst.terms[0])
    lhs = cubic_frame_term(s, Var(fresh))
    return ProblemInstance("XSAT", "affine", (lhs,), inst.constants, inst.designated), fresh


def _affinize(t: CrossTerm) -> CrossTerm:
    from .terms import postorder
    new = {}
    for node in postorder(t):
        if isinstance(node, Cross):
            new[id(node)] = Cross(new[id(node.left)], new[id(node.right)])
        elif isinstance(node, ProjConst):
            new[id(node)] = AffineConst(node.point.rep)
        else:
            new[id(node)] = node
    return new[id(t)]


_W_CANDIDATES = [Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 0), Vec3(0, 1, 1),
                 Vec3(1, 0, 1), Vec3(1, 1, 1), Vec3(1, 2, 3), Vec3(1, -1, 2), Vec3(2, 1, -1)]


def _rational_root(c: Scalar, n: int) -> Optional[Fraction]:
    """Exact ``n``-th root of a rational ``c`` when it exists (real branch)."""
    if isinstance(c, QuadExt) or n < 1:
        return None
    c = Fraction(c)
    if c < 0 and n % 2 == 0:
        return None
    sgn = -1 if c < 0 else 1

    def iroot(m: int) -> Optional[int]:
        r = round(m ** (1.0 / n)) if m else 0
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** n == m:
                return cand
        # large integers: bisection
        lo, hi = 0, 1 << (m.bit_length() // n + 1)
        while lo < hi:
            mid = (lo + hi) // 2
            if mid ** n < m:
                lo = mid + 1
            else:
                hi = mid
        return lo if lo ** n == m else None

    num, den = iroot(abs(c.numerator)), iroot(c.denominator)
    if num is None or den is None:
        return None
    return sgn * Fraction(num, den)


def xsat_witness_to_affine(inst: ProblemInstance, w: Witness) -> Witness:
    """Exact transport of a projective XSAT witness to ``projective_to_affine_xsat(inst)``.

    With the auxiliary vector fixed, ``s'`` is a multiple ``mu v1`` of the
    designated vector.  Scaling the auxiliary vector by ``l`` and each variable
    ``k`` by ``b_k`` multiplies the left side by ``l^3 prod b_k^(D_k)`` and the
    right side by ``b_1``, so ``l^3 b_1^(D_1 - 1) prod b_k^(D_k) = 1/mu`` is
    needed.  An integer combination of the exponents equal to their gcd ``g``
    solves it over the rationals whenever ``g = 1`` or ``1/mu`` has a rational
    ``g``-th root.
    """
    if not verify_witness(inst, w):
        raise ValueError("not a witness of the projective instance")
    target, fresh = projective_to_affine_xsat(inst)
    a = _affine_assignment(w)
    deg = multidegree(target.terms[0])
    names = [fresh] + [k for k in inst.variables if deg.get(k, 0) or k == inst.designated]
    exps = [deg[k] - (1 if k == inst.designated else 0) for k in names]
    used = [(k, e) for k, e in zip(names, exps) if e != 0]
    g, coeffs = _xgcd_combination([abs(e) for _, e in used])
    coeffs = [c if e > 0 else -c for c, (_, e) in zip(coeffs, used)]
    v1 = a[inst.designated]
    for cand in _W_CANDIDATES:
        trial = dict(a)
        trial[fresh] = cand
        value = eval_affine(target.terms[0], trial)
        if value.is_zero():
            continue
        i = next(k for k in range(3) if v1[k] != 0)
        mu = sdiv(value[i], v1[i])
        c = sdiv(1, mu) if g == 1 else _rational_root(sdiv(1, mu), g)
        if c is None:
            continue
        for (k, _), ck in zip(used, coeffs):
            trial[k] = trial[k] * spow(c, ck)
        out = Witness(trial)
        if verify_witness(target, out):
            return out
    raise NotConstructible("no auxiliary vector gives a rational rescaling")


def xsat_witness_to_projective(inst: ProblemInstance, w: Witness) -> Witness:
    """Backward transport: drop the auxiliary vector, pass to projective classes."""
    target, fresh = projective_to_affine_xsat(inst)
    if not verify_witness(target, w):
        raise ValueError("not a witness of the affine instance")
    a = _affine_assignment(w)
    out = {}
    for k in inst.variables:
        v = a[k]
        out[k] = ProjPoint(v if not v.is_zero() else E1)
    back = Witness(out)
    if not verify_witness(inst, back):
        raise AssertionError("backward XSAT transport lost acceptance")
    return back


# ---------------------------------------------------------------------------
# polynomial identity -> XNONTRIV


def xnontriv_equation_from_poly(p) -> ProblemInstance:
    """``t'''_p x A``: defined somewhere iff ``p`` is not identically zero."""
    from .vonstaudt import compile_constant_free
    inst = compile_constant_free(p)
    return ProblemInstance("XNONTRIV", "projective", (Cross(inst.lhs, inst.rhs),))
