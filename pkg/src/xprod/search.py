"""Exhaustive and random witness search on integer grids.

The projective grid of bound ``N`` holds one primitive integer triple per
point with all coordinates in ``[-N, N]`` and first nonzero coordinate
positive; the affine grid is every integer triple in that cube.  Search
results are certificates about the grid only.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence

from .exactfield import E3, ProjPoint, Vec3, cross, proj_cross
from .problems import ProblemInstance, Witness, verify_witness
from .terms import AffineConst, Cross, ProjConst, Var, multidegree, postorder

STRATEGIES = ("exhaustive", "random")


def _grid_key(c):
    return (max(abs(x) for x in c), sum(abs(x) for x in c), tuple(-x for x in c))


def enumerate_proj_points(N: int) -> List[ProjPoint]:
    """Every point with a primitive representative of sup-norm at most ``N``."""
    if N < 1:
        raise ValueError("grid bound must be at least 1")
    rng = range(-N, N + 1)
    triples = []
    for c in itertools.product(rng, rng, rng):
        if c == (0, 0, 0) or math.gcd(*c) != 1:
            continue
        first = next(x for x in c if x != 0)
        if first > 0:
            triples.append(c)
    triples.sort(key=_grid_key)
    return [ProjPoint(Vec3(*c)) for c in triples]


def enumerate_affine_vectors(N: int, include_zero: bool = True) -> List[Vec3]:
    if N < 1:
        raise ValueError("grid bound must be at least 1")
    rng = range(-N, N + 1)
    out = [c for c in itertools.product(rng, rng, rng) if include_zero or c != (0, 0, 0)]
    out.sort(key=_grid_key)
    return [Vec3(*c) for c in out]


@dataclass
class SearchConfig:
    bound: int = 2
    budget: int = 10 ** 6
    seed: int = 0
    strategy: str = "exhaustive"
    field_tag: str = "Q"
    # variables pinned to given values; they are not searched
    fixed: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.bound < 1:
            raise ValueError("bound must be at least 1")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.field_tag != "Q":
            raise ValueError("grid search runs over the rationals only")


@dataclass
class SearchResult:
    verdict: str  # found | exhausted | budget_exceeded
    witness: Optional[Witness]
    evaluations: int
    bound: int

    @property
    def found(self) -> bool:
        return self.verdict == "found"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "evaluations": self.evaluations, "bound": self.bound}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.verdict == "exhausted":
            out["note"] = f"no witness with coordinates bounded by {self.bound}"
        return out


def _grid(inst: ProblemInstance, N: int) -> list:
    if inst.mode == "projective":
        return enumerate_proj_points(N)
    return enumerate_affine_vectors(N)


def _pin(inst: ProblemInstance, value):
    if inst.mode == "projective":
        return value if isinstance(value, ProjPoint) else ProjPoint(value)
    return value.rep if isinstance(value, ProjPoint) else (
        value if isinstance(value, Vec3) else Vec3.of(value))


def _search_order(inst: ProblemInstance, fixed) -> List[str]:
    deg: Dict[str, int] = {}
    for t in inst.terms:
        for k, v in multidegree(t).items():
            deg[k] = deg.get(k, 0) + v
    names = [n for n in inst.variables if n not in fixed]
    # heavily used variables first so that pruning cuts early
    return sorted(names, key=lambda n: -deg[n])


class _Evaluator:
    """Level-by-level evaluation of the instance terms under a growing assignment."""

    def __init__(self, inst: ProblemInstance, order: Sequence[str], fixed: Mapping[str, object]):
        self.inst = inst
        self.projective = inst.mode == "projective"
        level_of = {n: i for i, n in enumerate(order)}
        nodes = []
        seen = set()
        for t in inst.terms:
            for node in postorder(t):
                if id(node) not in seen:
                    seen.add(id(node))
                    nodes.append(node)
        lvl: Dict[int, int] = {}
        for node in nodes:
            if isinstance(node, Cross):
                lvl[id(node)] = max(lvl[id(node.left)], lvl[id(node.right)])
            elif isinstance(node, Var):
                lvl[id(node)] = level_of.get(node.name, -1)
            else:
                lvl[id(node)] = -1
        self.levels: List[List] = [[] for _ in range(len(order) + 1)]
        for node in nodes:
            self.levels[lvl[id(node)] + 1].append(node)
        self.vals: Dict[int, object] = {}
        self.assignment: Dict[str, object] = dict(fixed)

    def run_level(self, level: int) -> bool:
        """Evaluate nodes of ``level`` (-1 = fixed part); False if some node is undefined."""
        vals = self.vals
        for node in self.levels[level + 1]:
            if isinstance(node, Cross):
                l, r = vals[id(node.left)], vals[id(node.right)]
                if self.projective:
                    v = proj_cross(l, r)
                    if v is None:
                        return False
                else:
                    v = cross(l, r)
                vals[id(node)] = v
            elif isinstance(node, Var):
                vals[id(node)] = self.assignment[node.name]
            elif isinstance(node, ProjConst):
                vals[id(node)] = node.point if self.projective else node.point.rep
            elif isinstance(node, AffineConst):
                vals[id(node)] = node.value if not self.projective else ProjPoint(node.value)
        return True

    def accepts(self) -> bool:
        inst = self.inst
        values = [self.vals[id(t)] for t in inst.terms]
        if inst.kind == "XNONTRIV":
            return self.projective or not values[0].is_zero()
        if inst.kind == "XUVEC":
            return values[0] == E3
        if inst.kind == "XNONEQUIV":
            return values[0] != values[1]
        target = values[1] if len(values) == 2 else self.assignment[inst.designated]
        if not self.projective and target.is_zero():
            return False
        return values[0] == target


def _checked(inst: ProblemInstance, assignment) -> Witness:
    w = Witness(dict(assignment))
    verdict = verify_witness(inst, w)
    if not verdict:
        raise AssertionError(f"search produced a rejected witness: {verdict.reason}")
    return w


def brute_search(inst: ProblemInstance, cfg: SearchConfig) -> SearchResult:
    """Depth-first sweep of the grid; the first accepted assignment in grid order wins."""
    fixed = {k: _pin(inst, v) for k, v in cfg.fixed.items()}
    order = _search_order(inst, fixed)
    grid = _grid(inst, cfg.bound)
    ev = _Evaluator(inst, order, fixed)
    evaluations = 0
    if not ev.run_level(-1):
        return SearchResult("exhausted", None, 0, cfg.bound)
    if not order:
        evaluations = 1
        if ev.accepts():
            return SearchResult("found", _checked(inst, ev.assignment), 1, cfg.bound)
        return SearchResult("exhausted", None, 1, cfg.bound)

    depth = len(order)
    iters: List[Iterator] = [iter(grid)]
    while iters:
        level = len(iters) - 1
        try:
            value = next(iters[-1])
        except StopIteration:
            iters.pop()
            continue
        if evaluations >= cfg.budget:
            return SearchResult("budget_exceeded", None, evaluations, cfg.bound)
        evaluations += 1
        ev.assignment[order[level]] = value
        if not ev.run_level(level):
            continue
        if level + 1 < depth:
            iters.append(iter(grid))
        elif ev.accepts():
            w = _checked(inst, {k: ev.assignment[k] for k in inst.variables})
            return SearchResult("found", w, evaluations, cfg.bound)
    return SearchResult("exhausted", None, evaluations, cfg.bound)


def random_search(inst: ProblemInstance, cfg: SearchConfig) -> SearchResult:
    """Independent uniform draws from the grid, ``cfg.budget`` of them at most."""
    fixed = {k: _pin(inst, v) for k, v in cfg.fixed.items()}
    names = [n for n in inst.variables if n not in fixed]
    grid = _grid(inst, cfg.bound)
    rng = random.Random(cfg.seed)
    for i in range(cfg.budget):
        assignment = dict(fixed)
        for n in names:
            assignment[n] = rng.choice(grid)
        if verify_witness(inst, Witness(assignment)):
            return SearchResult("found", Witness(assignment), i + 1, cfg.bound)
    return SearchResult("budget_exceeded", None, cfg.budget, cfg.bound)


def search(inst: ProblemInstance, cfg: SearchConfig) -> SearchResult:
    if cfg.strategy == "random":
        return random_search(inst, cfg)
    return brute_search(inst, cfg)
