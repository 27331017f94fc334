"""Polynomial (ring) terms over +, -, * and the dense-expansion oracle.

Ring terms are the input of the reduction compiler.  ``expand_dense`` is the
exponential-in-the-worst-case oracle and refuses terms above a size limit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .exactfield import Scalar, Scanner, as_scalar, format_scalar, tower_of

__all__ = [
    "Var", "Const", "Add", "Sub", "Mul", "RingTerm", "DensePoly",
    "SizeLimitExceeded", "DisallowedConstant",
    "parse_poly", "print_poly", "eval_poly", "expand_dense", "random_ring_term",
    "size", "description_size", "poly_variables", "constants", "check_mode",
    "sum_of_squares", "load_batch",
]

RESERVED = frozenset({"x"})
DEFAULT_SIZE_LIMIT = 24


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Scalar


@dataclass(frozen=True)
class Add:
    left: "RingTerm"
    right: "RingTerm"


@dataclass(frozen=True)
class Sub:
    left: "RingTerm"
    right: "RingTerm"


@dataclass(frozen=True)
class Mul:
    left: "RingTerm"
    right: "RingTerm"


RingTerm = Union[Var, Const, Add, Sub, Mul]
_BINARY = (Add, Sub, Mul)
_SYMBOL = {Add: "+", Sub: "-", Mul: "*"}
_PREC = {Add: 1, Sub: 1, Mul: 2}


class SizeLimitExceeded(ValueError):
    pass


class DisallowedConstant(ValueError):
    pass


def _postorder(p: RingTerm) -> List[RingTerm]:
    seen = set()
    out: List[RingTerm] = []
    stack = [(p, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded or not isinstance(node, _BINARY):
            seen.add(id(node))
            out.append(node)
            continue
        stack.append((node, True))
        stack.append((node.right, False))
        stack.append((node.left, False))
    return out


def size(p: RingTerm) -> int:
    """Node count of the expression tree."""
    n: Dict[int, int] = {}
    for node in _postorder(p):
        n[id(node)] = 1 + (n[id(node.left)] + n[id(node.right)] if isinstance(node, _BINARY) else 0)
    return n[id(p)]


def _const_bits(c: Scalar) -> int:
    if isinstance(c, (int, Fraction)):
        c = Fraction(c)
        return max(1, abs(c.numerator).bit_length() + c.denominator.bit_length() - 1)
    return len(format_scalar(c))


def description_size(p: RingTerm) -> int:
    """Tree size with each constant weighted by its binary length."""
    n: Dict[int, int] = {}
    for node in _postorder(p):
        if isinstance(node, _BINARY):
            n[id(node)] = 1 + n[id(node.left)] + n[id(node.right)]
        elif isinstance(node, Const):
            n[id(node)] = _const_bits(node.value)
        else:
            n[id(node)] = 1
    return n[id(p)]


def poly_variables(p: RingTerm) -> List[str]:
    names: Dict[str, None] = {}
    for node in _postorder(p):
        if isinstance(node, Var):
            names.setdefault(node.name)
    return list(names)


def constants(p: RingTerm) -> List[Scalar]:
    return [node.value for node in _postorder(p) if isinstance(node, Const)]


def check_mode(p: RingTerm, mode: str) -> None:
    """``pm1``: constants in {0, 1, -1}; ``integer``; ``rational``: anything rational."""
    for c in constants(p):
        if mode == "pm1" and c not in (0, 1, -1):
            raise DisallowedConstant(f"constant {format_scalar(c)} not in {{0, 1, -1}}")
        if mode == "integer" and not (isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1)):
            raise DisallowedConstant(f"constant {format_scalar(c)} is not an integer")
        if mode in ("rational", "integer") and tower_of(c):
            raise DisallowedConstant(f"constant {format_scalar(c)} is irrational")


def sum_of_squares(polys: Sequence[RingTerm]) -> RingTerm:
    """Combine a system ``p1 = ... = pk = 0`` into the single equation ``sum pi^2 = 0``."""
    if not polys:
        return Const(0)
    out: RingTerm = Mul(polys[0], polys[0])
    for q in polys[1:]:
        out = Add(out, Mul(q, q))
    return out


# ---------------------------------------------------------------------------
# syntax


def _scan_atom(sc: Scanner) -> RingTerm:
    c = sc.peek()
    if sc.match("("):
        e = _scan_expr(sc)
        sc.expect(")")
        return e
    if c.isdigit():
        num = sc.integer()
        if sc.match("/"):
            den = sc.integer()
            if den == 0:
                sc.error("zero denominator")
            value = Fraction(num, den)
            return Const(value.numerator if value.denominator == 1 else value)
        return Const(num)
    if c.isalpha():
        start = sc.pos
        name = sc.identifier()
        if name in RESERVED:
            sc.pos = start
            sc.error(f"{name!r} is reserved for the cross product; pick another variable name")
        return Var(name)
    sc.error(f"expected a number, variable or '(', found {c or 'end of input'!r}")


def _scan_unary(sc: Scanner) -> RingTerm:
    if sc.match("-"):
        inner = _scan_unary(sc)
        if isinstance(inner, Const):
            return Const(-inner.value)
        return Sub(Const(0), inner)
    return _scan_atom(sc)


def _scan_product(sc: Scanner) -> RingTerm:
    node = _scan_unary(sc)
    while sc.match("*"):
        node = Mul(node, _scan_unary(sc))
    return node


def _scan_expr(sc: Scanner) -> RingTerm:
    node = _scan_product(sc)
    while True:
        if sc.match("+"):
            node = Add(node, _scan_product(sc))
        elif sc.match("-"):
            node = Sub(node, _scan_product(sc))
        else:
            return node


def parse_poly(text: str) -> RingTerm:
    """Parse infix ``+ - *`` with the usual precedence; ``a/b`` is a rational literal."""
    sc = Scanner(text)
    p = _scan_expr(sc)
    sc.finish()
    return p


def print_poly(p: RingTerm) -> str:
    """Minimal parenthesization that re-parses to the same tree."""
    text: Dict[int, str] = {}
    for node in _postorder(p):
        if isinstance(node, Var):
            text[id(node)] = node.name
        elif isinstance(node, Const):
            text[id(node)] = format_scalar(node.value)
        else:
            prec = _PREC[type(node)]
            left, right = text[id(node.left)], text[id(node.right)]
            if isinstance(node.left, _BINARY) and _PREC[type(node.left)] < prec:
                left = f"({left})"
            if isinstance(node.right, _BINARY) and _PREC[type(node.right)] <= prec:
                right = f"({right})"
            text[id(node)] = f"{left} {_SYMBOL[type(node)]} {right}"
    return text[id(p)]


# ---------------------------------------------------------------------------
# evaluation


def eval_poly(p: RingTerm, point: Mapping[str, Scalar]) -> Scalar:
    val: Dict[int, Scalar] = {}
    for node in _postorder(p):
        if isinstance(node, Var):
            try:
                val[id(node)] = as_scalar(point[node.name])
            except KeyError:
                raise KeyError(f"unbound variable {node.name!r}") from None
        elif isinstance(node, Const):
            val[id(node)] = node.value
        else:
            l, r = val[id(node.left)], val[id(node.right)]
            if isinstance(node, Add):
                val[id(node)] = l + r
            elif isinstance(node, Sub):
                val[id(node)] = l - r
            else:
                val[id(node)] = l * r
    return val[id(p)]


Monomial = Tuple[Tuple[str, int], ...]


class DensePoly:
    """Sparse coefficient map ``monomial -> coefficient`` with no zero entries.

    A monomial is a sorted tuple of ``(variable, exponent)`` pairs, so the
    variable set is open-ended.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Scalar]] = None):
        self.terms: Dict[Monomial, Scalar] = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, c: Scalar) -> "DensePoly":
        return cls({(): c})

    @classmethod
    def variable(cls, name: str) -> "DensePoly":
        return cls({((name, 1),): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DensePoly):
            return NotImplemented
        return self.terms == other.terms

    def __add__(self, other: "DensePoly") -> "DensePoly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return DensePoly(out)

    def __neg__(self) -> "DensePoly":
        return DensePoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "DensePoly") -> "DensePoly":
        return self + (-other)

    def __mul__(self, other: "DensePoly") -> "DensePoly":
        out: Dict[Monomial, Scalar] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return DensePoly(out)

    def evaluate(self, point: Mapping[str, Scalar]) -> Scalar:
        total: Scalar = 0
        for m, c in self.terms.items():
            term = c
            for name, e in m:
                term = term * as_scalar(point[name]) ** e
            total = total + term
        return total

    def items(self) -> List[Tuple[Monomial, Scalar]]:
        return sorted(self.terms.items())

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.items():
            mono = "*".join(name if e == 1 else f"{name}^{e}" for name, e in m)
            parts.append(f"{format_scalar(c)}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    __repr__ = __str__


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for name, e in b:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


def expand_dense(p: RingTerm, limit: Optional[int] = DEFAULT_SIZE_LIMIT) -> DensePoly:
    n = size(p)
    if limit is not None and n > limit:
        raise SizeLimitExceeded(f"term has {n} nodes, dense expansion limit is {limit}")
    val: Dict[int, DensePoly] = {}
    for node in _postorder(p):
        if isinstance(node, Var):
            val[id(node)] = DensePoly.variable(node.name)
        elif isinstance(node, Const):
            val[id(node)] = DensePoly.constant(node.value)
        else:
            l, r = val[id(node.left)], val[id(node.right)]
            if isinstance(node, Add):
                val[id(node)] = l + r
            elif isinstance(node, Sub):
                val[id(node)] = l - r
            else:
                val[id(node)] = l * r
    return val[id(p)]


# ---------------------------------------------------------------------------
# generators and batch input


def _random_const(rng: random.Random, mode: str) -> Scalar:
    if mode == "pm1":
        return rng.choice((0, 1, -1))
    if mode == "integer":
        return rng.randint(-3, 3)
    value = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return value.numerator if value.denominator == 1 else value


def random_ring_term(size: int, n_vars: int, seed, mode: str = "pm1",
                     var_prob: float = 0.7) -> RingTerm:
    """Random expression with at most ``size`` nodes over ``X1..Xn``.

    Binary trees have an odd node count, so an even ``size`` yields ``size - 1`` nodes.
    """
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = random.Random(seed)
    names = [f"X{i + 1}" for i in range(n_vars)]

    def build(leaves: int) -> RingTerm:
        if leaves == 1:
            if names and rng.random() < var_prob:
                return Var(rng.choice(names))
            return Const(_random_const(rng, mode))
        k = rng.randint(1, leaves - 1)
        op = rng.choice(_BINARY)
        return op(build(k), build(leaves - k))

    return build((size + 1) // 2)


def load_batch(obj: Mapping) -> List[RingTerm]:
    """``{"polys": [text, ...], "mode": "pm1" | "rational"}``."""
    mode = obj.get("mode", "rational")
    if mode not in ("pm1", "rational", "integer"):
        raise ValueError(f"unknown mode {mode!r}")
    polys = [parse_poly(text) for text in obj["polys"]]
    for p in polys:
        check_mode(p, mode)
    return polys
