"""Exact scalars, 3-vectors and projective points.

Scalars are Python ``int``/``Fraction`` values (the rationals) or
:class:`QuadExt` elements ``a + b*sqrt(d)`` of a tower of real quadratic
extensions over the rationals.  Every value is kept in a canonical form
(an extension element whose ``b`` part vanishes collapses to its base
field), so structural equality is value equality inside one tower.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd, isqrt
from typing import Iterator, Optional, Sequence, Tuple, Union

__all__ = [
    "QuadExt", "Scalar", "Tower", "IncompatibleTowers", "ParseError", "Scanner",
    "Vec3", "ProjPoint", "Mat3",
    "tower_of", "join_towers", "extend_tower", "sign", "inverse", "sdiv", "spow",
    "sqrt_in", "adjoin_sqrt", "to_float", "as_scalar",
    "format_scalar", "parse_scalar", "parse_vec3", "parse_projpoint",
    "cross", "proj_cross", "rational_rotation", "orthogonal_basis",
]

Scalar = Union[int, Fraction, "QuadExt"]
Tower = Tuple[Scalar, ...]


class IncompatibleTowers(ValueError):
    """Two scalars live in extension towers neither of which contains the other."""


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.message = message
        self.text = text
        self.pos = pos
        where = f" at position {pos}" if text else ""
        super().__init__(f"{message}{where}")


# ---------------------------------------------------------------------------
# towers


def tower_of(x: Scalar) -> Tower:
    if isinstance(x, QuadExt):
        return x.tower
    return ()


def join_towers(*towers: Tower) -> Tower:
    best: Tower = ()
    for t in towers:
        if len(t) > len(best):
            t, best = best, t
        if best[: len(t)] != t:
            raise IncompatibleTowers(f"towers {t} and {best} are not nested")
    return best


def _split(x: Scalar, tower: Tower) -> Tuple[Scalar, Scalar]:
    if isinstance(x, QuadExt) and x.tower == tower:
        return x.a, x.b
    return x, 0


def _make(a: Scalar, b: Scalar, tower: Tower) -> Scalar:
    if b == 0:
        return a
    return QuadExt(a, b, tower)


class QuadExt:
    """``a + b*sqrt(tower[-1])`` with ``a, b`` in the field ``tower[:-1]``.

    Construct through arithmetic, :func:`adjoin_sqrt` or :func:`parse_scalar`;
    the raw constructor does not validate or canonicalize.
    """

    __slots__ = ("a", "b", "tower", "_hash")

    def __init__(self, a: Scalar, b: Scalar, tower: Tower):
        self.a = a
        self.b = b
        self.tower = tower
        self._hash: Optional[int] = None

    @property
    def radicand(self) -> Scalar:
        return self.tower[-1]

    def __repr__(self) -> str:
        return f"QuadExt({self.a!r}, {self.b!r}, sqrt={self.radicand!r})"

    def __str__(self) -> str:
        return format_scalar(self)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.a, self.b, self.tower))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, QuadExt):
            return (self is other or (self.tower == other.tower
                                      and self.a == other.a and self.b == other.b))
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __neg__(self) -> Scalar:
        return QuadExt(-self.a, -self.b, self.tower)

    def __pos__(self) -> Scalar:
        return self

    def __add__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        t = join_towers(self.tower, tower_of(other))
        xa, xb = _split(self, t)
        ya, yb = _split(other, t)
        return _make(xa + ya, xb + yb, t)

    __radd__ = __add__

    def __sub__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        return (-self) + other

    def __mul__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        t = join_towers(self.tower, tower_of(other))
        xa, xb = _split(self, t)
        ya, yb = _split(other, t)
        d = t[-1]
        return _make(xa * ya + d * (xb * yb), xa * yb + xb * ya, t)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        return self * inverse(other)

    def __rtruediv__(self, other: Scalar) -> Scalar:
        if not isinstance(other, (int, Fraction, QuadExt)):
            return NotImplemented
        return other * inverse(self)

    def __pow__(self, n: int) -> Scalar:
        if n < 0:
            return inverse(self) ** (-n)
        result: Scalar = 1
        base: Scalar = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _cmp(self, other: object) -> int:
        if not isinstance(other, (int, Fraction, QuadExt)):
            raise TypeError
        return sign(self - other)

    def __lt__(self, other: Scalar) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: Scalar) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: Scalar) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: Scalar) -> bool:
        return self._cmp(other) >= 0

    def __float__(self) -> float:
        return to_float(self)

    def __bool__(self) -> bool:
        return True


def as_scalar(x) -> Scalar:
    if isinstance(x, (int, Fraction, QuadExt)) and not isinstance(x, bool):
        return x
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, str):
        return parse_scalar(x)
    raise TypeError(f"not an exact scalar: {x!r}")


def inverse(x: Scalar) -> Scalar:
    if isinstance(x, QuadExt):
        d = x.radicand
        norm = x.a * x.a - d * (x.b * x.b)
        if norm == 0:
            # only possible when the radicand is secretly a square
            raise ZeroDivisionError("norm vanished: radicand is a square in its base field")
        ninv = inverse(norm)
        return _make(x.a * ninv, -x.b * ninv, x.tower)
    return 1 / Fraction(x)


def sdiv(x: Scalar, y: Scalar) -> Scalar:
    """Exact division ``x / y`` (never produces a float)."""
    if isinstance(x, int) and isinstance(y, int):
        return Fraction(x, y)
    return x * inverse(y)


def spow(x: Scalar, n: int) -> Scalar:
    """Exact integer power (negative exponents invert exactly)."""
    if n < 0:
        return inverse(x) ** (-n)
    return x ** n


def sign(x: Scalar) -> int:
    """Sign under the real embedding taking every ``sqrt`` positive."""
    if not isinstance(x, QuadExt):
        return (x > 0) - (x < 0)
    sa, sb = sign(x.a), sign(x.b)
    if sa == 0 or sa == sb:
        return sb
    # opposite signs: compare a^2 against b^2 * d
    return sa if sign(x.a * x.a - x.radicand * (x.b * x.b)) > 0 else sb


def to_float(x: Scalar) -> float:
    if isinstance(x, QuadExt):
        return to_float(x.a) + to_float(x.b) * to_float(x.radicand) ** 0.5
    return float(x)


def _rational_sqrt(x: Scalar) -> Optional[Scalar]:
    x = Fraction(x)
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd) if rd != 1 else rn
    return None


def sqrt_in(x: Scalar, tower: Optional[Tower] = None) -> Optional[Scalar]:
    """Nonnegative square root of ``x`` inside the field ``tower``, or ``None``.

    The search is complete: ``(c + e*sqrt(d))**2 = a + b*sqrt(d)`` forces
    ``c**2 = (a +- sqrt(a**2 - d*b**2)) / 2`` in the base field.
    """
    if tower is None:
        tower = tower_of(x)
    join_towers(tower_of(x), tower)
    if sign(x) < 0:
        return None
    if not tower:
        return _rational_sqrt(x)
    base, d = tower[:-1], tower[-1]
    a, b = _split(x, tower)
    if b == 0:
        r = sqrt_in(a, base)
        if r is not None:
            return r
        e = sqrt_in(sdiv(a, d), base)
        if e is None:
            return None
        return _make(0, e, tower)
    s = sqrt_in(a * a - d * (b * b), base)
    if s is None:
        return None
    for cand in (a + s, a - s):
        c = sqrt_in(sdiv(cand, 2), base)
        if c is None or c == 0:
            continue
        root = _make(c, sdiv(b, 2 * c), tower)
        return -root if sign(root) < 0 else root
    return None


def extend_tower(base: Tower, d: Scalar) -> Tower:
    """Validate and return ``base + (d,)``; ``d`` must be a positive non-square of ``base``."""
    join_towers(tower_of(d), base)
    if sign(d) <= 0:
        raise ValueError(f"radicand {format_scalar(d)} must be positive")
    if sqrt_in(d, base) is not None:
        raise ValueError(f"radicand {format_scalar(d)} is a square in its base field")
    return base + (d,)


def adjoin_sqrt(x: Scalar, tower: Optional[Tower] = None) -> Tuple[Scalar, Tower]:
    """Return ``(sqrt(x), field)``; the field is ``tower`` extended only if needed."""
    if tower is None:
        tower = tower_of(x)
    tower = join_towers(tower, tower_of(x))
    if sign(x) < 0:
        raise ValueError("square root of a negative number is not real")
    r = sqrt_in(x, tower)
    if r is not None:
        return r, tower
    new = tower + (x,)
    return QuadExt(0, 1, new), new


# ---------------------------------------------------------------------------
# text format


def format_scalar(x: Scalar, tower: Optional[Tower] = None) -> str:
    """``p/q`` for rationals, ``(a + b * sqrt(D))`` for extension elements.

    Radicands are printed padded to their base field so that the text
    carries the full tower and re-parses into the same field.
    """
    own = tower_of(x)
    if tower is not None and len(tower) > len(own):
        inner = format_scalar(x, tower[:-1])
        return f"({inner} + 0 * sqrt({format_scalar(tower[-1], tower[:-1])}))"
    if isinstance(x, QuadExt):
        base = x.tower[:-1]
        return (f"({format_scalar(x.a)} + {format_scalar(x.b)} * "
                f"sqrt({format_scalar(x.radicand, base)}))")
    return str(Fraction(x))


class Scanner:
    """Character scanner shared by the scalar, vector and term grammars."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def at_end(self) -> bool:
        return self.peek() == ""

    def match(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.match(token):
            found = self.peek() or "end of input"
            self.error(f"expected {token!r}, found {found!r}")

    def error(self, message: str):
        raise ParseError(message, self.text, self.pos)

    def identifier(self) -> str:
        self.skip_ws()
        start = self.pos
        if start >= len(self.text) or not self.text[start].isalpha():
            self.error("expected identifier")
        end = start
        while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
            end += 1
        self.pos = end
        return self.text[start:end]

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        end = start
        while end < len(self.text) and self.text[end].isdigit():
            end += 1
        if end == start:
            self.error("expected digits")
        self.pos = end
        return int(self.text[start:end])

    def finish(self) -> None:
        if not self.at_end():
            self.error(f"unexpected trailing input {self.peek()!r}")


def _scan_scalar(sc: Scanner) -> Tuple[Scalar, Tower]:
    if sc.match("("):
        a, ta = _scan_scalar(sc)
        sc.expect("+")
        b, tb = _scan_scalar(sc)
        sc.expect("*")
        sc.expect("sqrt")
        sc.expect("(")
        d, td = _scan_scalar(sc)
        sc.expect(")")
        sc.expect(")")
        try:
            tower = extend_tower(join_towers(ta, tb, td), d)
        except ValueError as exc:
            sc.error(str(exc))
        return _make(a, b, tower), tower
    neg = sc.match("-")
    num = sc.integer()
    value: Scalar = num
    if sc.match("/"):
        den = sc.integer()
        if den == 0:
            sc.error("zero denominator")
        value = Fraction(num, den)
        if value.denominator == 1:
            value = value.numerator
    return (-value if neg else value), ()


def scan_scalar(sc: Scanner) -> Scalar:
    return _scan_scalar(sc)[0]


def parse_scalar(text: str) -> Scalar:
    sc = Scanner(text)
    value = scan_scalar(sc)
    sc.finish()
    return value


def scan_vec3(sc: Scanner) -> "Vec3":
    sc.expect("[")
    x = scan_scalar(sc)
    sc.expect(",")
    y = scan_scalar(sc)
    sc.expect(",")
    z = scan_scalar(sc)
    sc.expect("]")
    return Vec3(x, y, z)


def scan_projpoint(sc: Scanner) -> "ProjPoint":
    start = sc.pos
    sc.expect("<")
    x = scan_scalar(sc)
    sc.expect(":")
    y = scan_scalar(sc)
    sc.expect(":")
    z = scan_scalar(sc)
    sc.expect(">")
    if x == 0 and y == 0 and z == 0:
        raise ParseError("projective point <0 : 0 : 0> does not exist", sc.text, start)
    return ProjPoint(Vec3(x, y, z))


def parse_vec3(text: str) -> "Vec3":
    sc = Scanner(text)
    v = scan_vec3(sc)
    sc.finish()
    return v


def parse_projpoint(text: str) -> "ProjPoint":
    sc = Scanner(text)
    p = scan_projpoint(sc)
    sc.finish()
    return p


# ---------------------------------------------------------------------------
# vectors


@dataclass(frozen=True)
class Vec3:
    x: Scalar
    y: Scalar
    z: Scalar

    def __iter__(self) -> Iterator[Scalar]:
        return iter((self.x, self.y, self.z))

    def __getitem__(self, i: int) -> Scalar:
        return (self.x, self.y, self.z)[i]

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> Vec3:
        return Vec3(-self.x, -self.y, -self.z)

    def __mul__(self, k: Scalar) -> Vec3:
        return Vec3(k * self.x, k * self.y, k * self.z)

    __rmul__ = __mul__

    def dot(self, other: Vec3) -> Scalar:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: Vec3) -> Vec3:
        return cross(self, other)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0 and self.z == 0

    @property
    def tower(self) -> Tower:
        return join_towers(tower_of(self.x), tower_of(self.y), tower_of(self.z))

    def __str__(self) -> str:
        return f"[{format_scalar(self.x)}, {format_scalar(self.y)}, {format_scalar(self.z)}]"

    @classmethod
    def of(cls, seq: Sequence) -> Vec3:
        x, y, z = (as_scalar(c) for c in seq)
        return cls(x, y, z)


ZERO = Vec3(0, 0, 0)
E1, E2, E3 = Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)


def cross(v: Vec3, w: Vec3) -> Vec3:
    v0, v1, v2 = v.x, v.y, v.z
    w0, w1, w2 = w.x, w.y, w.z
    return Vec3(v1 * w2 - v2 * w1, v2 * w0 - v0 * w2, v0 * w1 - v1 * w0)


def _primitive(v: Vec3) -> Vec3:
    comps = (v.x, v.y, v.z)
    if any(isinstance(c, QuadExt) for c in comps):
        return v
    dens = 1
    for c in comps:
        if isinstance(c, Fraction):
            dens = dens * c.denominator // gcd(dens, c.denominator)
    ints = [int(c * dens) for c in comps]
    g = gcd(gcd(ints[0], ints[1]), ints[2])
    if g != 1 or dens != 1 or any(isinstance(c, Fraction) for c in comps):
        return Vec3(ints[0] // g, ints[1] // g, ints[2] // g)
    return v


class ProjPoint:
    """A point ``F*rep`` of the projective plane.

    Rational representatives are stored as primitive integer vectors;
    equality and hashing use the canonical form (first nonzero coordinate 1).
    """

    def __init__(self, rep):
        if not isinstance(rep, Vec3):
            rep = Vec3.of(rep)
        if rep.is_zero():
            raise ValueError("the zero vector has no projective class")
        self.rep = _primitive(rep)

    @cached_property
    def canonical(self) -> Tuple[Scalar, Scalar, Scalar]:
        comps = tuple(self.rep)
        lead = next(c for c in comps if c != 0)
        if lead == 1:
            return comps
        inv = inverse(lead)
        out = []
        for c in comps:
            q = c * inv
            if isinstance(q, Fraction) and q.denominator == 1:
                q = q.numerator
            out.append(q)
        return tuple(out)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self is other or self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def __repr__(self) -> str:
        return f"ProjPoint({self})"

    def __str__(self) -> str:
        x, y, z = self.canonical
        return f"<{format_scalar(x)} : {format_scalar(y)} : {format_scalar(z)}>"

    def is_orthogonal_to(self, other: ProjPoint) -> bool:
        return self.rep.dot(other.rep) == 0


def proj_cross(p: ProjPoint, q: ProjPoint) -> Optional[ProjPoint]:
    """``F(v x w)``; ``None`` (undefined) when the two points coincide."""
    w = cross(p.rep, q.rep)
    if w.is_zero():
        return None
    return ProjPoint(w)


# ---------------------------------------------------------------------------
# matrices


@dataclass(frozen=True)
class Mat3:
    rows: Tuple[Vec3, Vec3, Vec3]

    @classmethod
    def identity(cls) -> Mat3:
        return cls((E1, E2, E3))

    @classmethod
    def of(cls, rows) -> Mat3:
        return cls(tuple(r if isinstance(r, Vec3) else Vec3.of(r) for r in rows))

    def transpose(self) -> Mat3:
        r0, r1, r2 = self.rows
        return Mat3((Vec3(r0.x, r1.x, r2.x), Vec3(r0.y, r1.y, r2.y), Vec3(r0.z, r1.z, r2.z)))

    def __matmul__(self, other):
        if isinstance(other, Vec3):
            return Vec3(*(row.dot(other) for row in self.rows))
        if isinstance(other, Mat3):
            cols = other.transpose().rows
            return Mat3(tuple(Vec3(*(row.dot(c) for c in cols)) for row in self.rows))
        return NotImplemented

    def det(self) -> Scalar:
        r0, r1, r2 = self.rows
        return r0.dot(cross(r1, r2))

    def is_rotation(self) -> bool:
        return self @ self.transpose() == Mat3.identity() and self.det() == 1

    def __str__(self) -> str:
        return "[" + ", ".join(str(r) for r in self.rows) + "]"


def _inverse3(m: Mat3) -> Mat3:
    r0, r1, r2 = m.rows
    det = m.det()
    if det == 0:
        raise ZeroDivisionError("singular matrix")
    inv = inverse(det)
    # columns of the inverse are the cross products of the rows
    cols = (cross(r1, r2) * inv, cross(r2, r0) * inv, cross(r0, r1) * inv)
    return Mat3(cols).transpose()


def rational_rotation(p, q, r) -> Mat3:
    """Cayley transform ``(I - S)(I + S)^-1`` of the skew matrix of ``(p, q, r)``."""
    p, q, r = (as_scalar(c) for c in (p, q, r))
    skew = Mat3((Vec3(0, r, -q), Vec3(-r, 0, p), Vec3(q, -p, 0)))
    ident = Mat3.identity()
    plus = Mat3(tuple(a + b for a, b in zip(ident.rows, skew.rows)))
    minus = Mat3(tuple(a - b for a, b in zip(ident.rows, skew.rows)))
    return minus @ _inverse3(plus)


def orthogonal_basis(skew, scales) -> Tuple[Vec3, Vec3, Vec3]:
    """Rows of ``rational_rotation(*skew)`` scaled by ``scales``, made right-handed."""
    scales = [as_scalar(s) for s in scales]
    if any(s == 0 for s in scales):
        raise ValueError("basis scales must be nonzero")
    rows = rational_rotation(*skew).rows
    basis = tuple(row * s for row, s in zip(rows, scales))
    if sign(basis[0].dot(cross(basis[1], basis[2]))) < 0:
        basis = tuple(-b for b in basis)
    return basis
