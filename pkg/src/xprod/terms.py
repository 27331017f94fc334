"""Cross-product terms: AST, concrete syntax, and the two evaluators.

Terms are immutable and may share sub-terms (a DAG); every traversal here is
iterative and visits each shared node once, while the semantics and the
printed form are those of the expanded tree.

Concrete syntax::

    term  := ident | '[' s ',' s ',' s ']' | '<' s ':' s ':' s '>'
           | '(' term 'x' term ')'

with ``s`` a scalar literal (see :mod:`xprod.exactfield`).  The bare word
``x`` is the operator and cannot name a variable.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Union

from .exactfield import (
    ProjPoint, Scanner, Vec3, cross, proj_cross, scan_projpoint, scan_vec3,
)

RESERVED = frozenset({"x"})


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AffineConst:
    value: Vec3

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class ProjConst:
    point: ProjPoint

    def __str__(self) -> str:
        return str(self.point)


@dataclass(frozen=True, eq=False)
class Cross:
    left: "CrossTerm"
    right: "CrossTerm"

    # structural equality and hashing without recursion; compiled terms are very deep
    def __hash__(self) -> int:
        cached = self.__dict__.get("_hash")
        if cached is not None:
            return cached
        for node in postorder(self):
            if isinstance(node, Cross) and "_hash" not in node.__dict__:
                h = hash(("x", hash(node.left), hash(node.right)))
                object.__setattr__(node, "_hash", h)
        return self.__dict__["_hash"]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cross):
            return NotImplemented
        done = set()
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b or (id(a), id(b)) in done:
                continue
            done.add((id(a), id(b)))
            if isinstance(a, Cross) and isinstance(b, Cross):
                if hash(a) != hash(b):
                    return False
                stack.append((a.right, b.right))
                stack.append((a.left, b.left))
            elif isinstance(a, Cross) or isinstance(b, Cross) or a != b:
                return False
        return True

    def __str__(self) -> str:
        return print_term(self)

    def __repr__(self) -> str:
        text = print_term(self)
        if len(text) > 120:
            text = text[:117] + "..."
        return f"Cross<{text}>"


CrossTerm = Union[Var, AffineConst, ProjConst, Cross]
Leaf = (Var, AffineConst, ProjConst)


class EvaluationError(ValueError):
    pass


class UnboundVariable(EvaluationError, KeyError):
    def __str__(self) -> str:
        return f"unbound variable {self.args[0]!r}"


class ModeMismatch(EvaluationError):
    pass


def cross_chain(*terms: CrossTerm) -> CrossTerm:
    """Left-nested product ``((t1 x t2) x t3) ...``."""
    out = terms[0]
    for t in terms[1:]:
        out = Cross(out, t)
    return out


# ---------------------------------------------------------------------------
# traversal and structure


def postorder(term: CrossTerm) -> List[CrossTerm]:
    """Distinct nodes, children before parents, left before right."""
    seen = set()
    out: List[CrossTerm] = []
    stack = [(term, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded or not isinstance(node, Cross):
            seen.add(id(node))
            out.append(node)
            continue
        stack.append((node, True))
        stack.append((node.right, False))
        stack.append((node.left, False))
    return out


def variables(term: CrossTerm) -> List[str]:
    """Variable names in order of first (leftmost) occurrence."""
    names: Dict[str, None] = {}
    for node in postorder(term):
        if isinstance(node, Var):
            names.setdefault(node.name)
    return list(names)


def dag_size(term: CrossTerm) -> int:
    return len(postorder(term))


def leaf_count(term: CrossTerm) -> int:
    """Number of leaves of the expanded tree."""
    count: Dict[int, int] = {}
    for node in postorder(term):
        if isinstance(node, Cross):
            count[id(node)] = count[id(node.left)] + count[id(node.right)]
        else:
            count[id(node)] = 1
    return count[id(term)]


def constant_leaves(term: CrossTerm) -> int:
    """Distinct constant leaf nodes (affine or projective)."""
    return sum(isinstance(n, (AffineConst, ProjConst)) for n in postorder(term))


def multidegree(term: CrossTerm) -> Dict[str, int]:
    """Leaf occurrences per variable, i.e. the degree of homogeneity in each."""
    deg: Dict[int, Counter] = {}
    for node in postorder(term):
        if isinstance(node, Cross):
            deg[id(node)] = deg[id(node.left)] + deg[id(node.right)]
        elif isinstance(node, Var):
            deg[id(node)] = Counter({node.name: 1})
        else:
            deg[id(node)] = Counter()
    return dict(deg[id(term)])


def substitute(term: CrossTerm, mapping: Mapping[str, CrossTerm]) -> CrossTerm:
    """Replace variables by terms, preserving sharing."""
    new: Dict[int, CrossTerm] = {}
    for node in postorder(term):
        if isinstance(node, Cross):
            l, r = new[id(node.left)], new[id(node.right)]
            new[id(node)] = node if (l is node.left and r is node.right) else Cross(l, r)
        elif isinstance(node, Var) and node.name in mapping:
            new[id(node)] = mapping[node.name]
        else:
            new[id(node)] = node
    return new[id(term)]


# ---------------------------------------------------------------------------
# evaluation


def _as_vec(value) -> Vec3:
    if isinstance(value, Vec3):
        return value
    if isinstance(value, ProjPoint):
        raise ModeMismatch("projective point given to the affine evaluator")
    return Vec3.of(value)


def _as_point(value) -> ProjPoint:
    if isinstance(value, ProjPoint):
        return value
    return ProjPoint(value)


def eval_affine(term: CrossTerm, assignment: Mapping[str, object]) -> Vec3:
    vals: Dict[int, Vec3] = {}
    for node in postorder(term):
        if isinstance(node, Cross):
            vals[id(node)] = cross(vals[id(node.left)], vals[id(node.right)])
        elif isinstance(node, Var):
            try:
                vals[id(node)] = _as_vec(assignment[node.name])
            except KeyError:
                raise UnboundVariable(node.name) from None
        elif isinstance(node, AffineConst):
            vals[id(node)] = node.value
        else:
            raise ModeMismatch("projective constant in affine evaluation")
    return vals[id(term)]


def eval_projective(term: CrossTerm, assignment: Mapping[str, object]) -> Optional[ProjPoint]:
    """Projective value, or ``None`` when some sub-product multiplies a point by itself."""
    nodes = postorder(term)
    # bind everything first so that unbound variables are reported even on
    # assignments that would short-circuit
    for node in nodes:
        if isinstance(node, Var) and node.name not in assignment:
            raise UnboundVariable(node.name)
        if isinstance(node, AffineConst):
            raise ModeMismatch("affine constant in projective evaluation")
    vals: Dict[int, ProjPoint] = {}
    for node in nodes:
        if isinstance(node, Cross):
            p = proj_cross(vals[id(node.left)], vals[id(node.right)])
            if p is None:
                return None
            vals[id(node)] = p
        elif isinstance(node, Var):
            vals[id(node)] = _as_point(assignment[node.name])
        else:
            vals[id(node)] = node.point
    return vals[id(term)]


# ---------------------------------------------------------------------------
# syntax


_AWAIT_LEFT = object()


def _scan_leaf(sc: Scanner) -> CrossTerm:
    c = sc.peek()
    if c == "[":
        return AffineConst(scan_vec3(sc))
    if c == "<":
        return ProjConst(scan_projpoint(sc))
    if c.isalpha():
        start = sc.pos
        name = sc.identifier()
        if name in RESERVED:
            sc.pos = start
            sc.error(f"reserved word {name!r} cannot be a variable")
        return Var(name)
    sc.error(f"expected a term, found {c or 'end of input'!r}")


def scan_term(sc: Scanner) -> CrossTerm:
    # explicit stack: compiled terms nest far deeper than the recursion limit allows
    stack: list = []
    while True:
        if sc.match("("):
            stack.append(_AWAIT_LEFT)
            continue
        node = _scan_leaf(sc)
        while True:
            if not stack:
                return node
            if stack[-1] is _AWAIT_LEFT:
                stack[-1] = node
                start = sc.pos
                sc.skip_ws()
                word_pos = sc.pos
                if sc.text[word_pos:word_pos + 1] != "x" or (
                        sc.text[word_pos + 1:word_pos + 2].isalnum()):
                    sc.pos = start
                    sc.error("expected operator 'x'")
                sc.pos = word_pos + 1
                break
            left = stack.pop()
            sc.expect(")")
            node = Cross(left, node)


def parse_term(text: str) -> CrossTerm:
    sc = Scanner(text)
    term = scan_term(sc)
    sc.finish()
    return term


def parse_terms(text: str) -> List[CrossTerm]:
    """One term per non-blank line (``#`` starts a comment line)."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(parse_term(line))
    return out


def print_term(term: CrossTerm) -> str:
    """Fully parenthesized text of the expanded tree (sharing is not serialized)."""
    text: Dict[int, str] = {}
    for node in postorder(term):
        if isinstance(node, Cross):
            text[id(node)] = f"({text[id(node.left)]} x {text[id(node.right)]})"
        else:
            text[id(node)] = str(node)
    return text[id(term)]


def format_terms(terms: Iterable[CrossTerm]) -> str:
    return "\n".join(print_term(t) for t in terms) + "\n"
