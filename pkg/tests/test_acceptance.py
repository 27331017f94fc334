"""Acceptance gate: one test per criterion, each printing a PASS or FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

from xprod import ringterms as rt
from xprod.circuits import (
    NonZero, ProbablyZero, coordinatize, degree_bound, eval_circuit, expand_circuit,
    is_identically_zero, pit_random, sos,
)
from xprod.exactfield import E3, Mat3, QuadExt, Vec3
from xprod.problems import (
    ProblemInstance, Witness, cubic_frame_term, verify_witness, xuvec_from_nontriv,
)
from xprod.search import SearchConfig, brute_search, enumerate_proj_points
from xprod.terms import Cross, Var, eval_affine, leaf_count, parse_term
from xprod.vonstaudt import (
    SIZE_CONSTANT, commutation_suite, compile_constant_free, gadget_suite, observation_points,
    random_frame, root_from_witness, witness_from_root,
)

from strategies import all_cross_terms

VANISHING = parse_term("(((V x (V x W)) x V) x (V x W))")
SMALL_CORPUS = all_cross_terms(("V", "W"), 6)


def report(n: int, ok: bool, detail: str) -> None:
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def planted_root_corpus(n: int = 50, seed: int = 2024):
    """Integer polynomials sum_j q_j * (a_j X_j - b_j) with the root X_j = b_j / a_j."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        nv = rng.randint(1, 3)
        roots, p = {}, None
        for j in range(nv):
            name = f"X{j + 1}"
            a, b = rng.randint(1, 5), rng.randint(-6, 6)
            roots[name] = Fraction(b, a)
            lin = rt.Sub(rt.Mul(rt.Const(a), rt.Var(name)), rt.Const(b))
            term = rt.Mul(rt.random_ring_term(rng.randint(1, 7), nv, rng.random(), "integer"), lin)
            p = term if p is None else rt.Add(p, term)
        out.append((p, roots))
    return out


def _rand_q(rng, spread=9):
    return Fraction(rng.randint(-spread, spread), rng.randint(1, spread))


def _rand_vec(rng):
    while True:
        v = Vec3(_rand_q(rng), _rand_q(rng), _rand_q(rng))
        if not v.is_zero():
            return v


def test_criterion_1_gadget_identities():
    rep = gadget_suite(1000, seed=0)
    ok = rep.ok and rep.cases == 1000 and rep.seconds < 60
    report(1, ok, f"{rep.cases} frames, {len(rep.failures)} failures, {rep.seconds:.1f}s")


def test_criterion_2_commutation():
    rep = commutation_suite(500, 5, seed=0, max_size=30, max_vars=4)
    rate = rep.undefined / rep.cases
    ok = not rep.failures and rep.cases == 2500 and rate < 0.01
    report(2, ok, f"{rep.cases} points, {len(rep.failures)} mismatches, "
                  f"undefined {rep.undefined} ({rate:.2%})")


def test_criterion_3_round_trip():
    corpus = planted_root_corpus()
    good = 0
    for i, (p, roots) in enumerate(corpus):
        inst = compile_constant_free(p)
        basis = None if i % 2 == 0 else random_frame(random.Random(i)).basis
        w = witness_from_root(roots, inst, basis)
        if verify_witness(inst.to_problem(), w) and root_from_witness(w, inst) == roots:
            good += 1
    report(3, good == len(corpus) == 50, f"{good}/{len(corpus)} planted roots round-trip")


def test_criterion_4_separating_instance():
    start = time.perf_counter()
    inst = compile_constant_free(rt.parse_poly("X*X - 2"))
    root = QuadExt(0, 1, (2,))
    w = witness_from_root({"X": root}, inst)
    accepted = bool(verify_witness(inst.to_problem(), w))
    # the frame variables are pinned to the observation points of the standard basis
    pins = observation_points()
    cfg = SearchConfig(bound=10, fixed={n: pins[k] for n, k in zip(inst.frame_vars, "ABC")})
    res = brute_search(inst.to_problem(), cfg)
    secs = time.perf_counter() - start
    ok = accepted and res.verdict == "exhausted" and secs < 300
    report(4, ok, f"sqrt(2) witness {'accepted' if accepted else 'rejected'}; grid N=10 "
                  f"({len(enumerate_proj_points(10))} points) {res.verdict}; {secs:.1f}s")


def test_criterion_5_pit_vs_dense():
    assert len(SMALL_CORPUS) == 3238
    disagree = []
    for t in SMALL_CORPUS:
        c = coordinatize(t)
        verdict = pit_random(sos(c), k=40, seed=leaf_count(t))
        if isinstance(verdict, ProbablyZero) != is_identically_zero(c):
            disagree.append(t)
    ex = pit_random(sos(coordinatize(VANISHING)), k=40, seed=0)
    ex_ok = isinstance(ex, ProbablyZero) and expand_circuit(sos(coordinatize(VANISHING))).is_zero()
    report(5, not disagree and ex_ok,
           f"{len(SMALL_CORPUS)} terms, {len(disagree)} disagreements; vanishing term "
           f"{'ProbablyZero and dense zero' if ex_ok else 'wrong'}")


def test_criterion_6_linear_sizes():
    rng = random.Random(6)
    corpus = list(SMALL_CORPUS)
    for _ in range(300):
        corpus.append(_random_term(rng, rng.randint(1, 60)))
    polys = [p for p, _ in planted_root_corpus()]
    polys += [rt.random_ring_term(rng.randint(1, 30), rng.randint(1, 4), rng.random(), mode)
              for mode in ("pm1", "integer") for _ in range(100)]
    polys.append(rt.parse_poly("X*X - 2"))
    compiled = [compile_constant_free(p) for p in polys]
    corpus += [inst.lhs for inst in compiled[:60]]
    node_bad = [t for t in corpus if coordinatize(t).node_count > 12 * leaf_count(t) + 9]
    ratios = [inst.size() / rt.description_size(p) for inst, p in zip(compiled, polys)]
    worst = max(ratios)
    ok = not node_bad and worst <= SIZE_CONSTANT
    report(6, ok, f"{len(corpus)} terms, {len(node_bad)} over 12*leaves+9; "
                  f"K = {SIZE_CONSTANT}, worst size ratio {worst:.2f} over {len(polys)} polys")


def _random_term(rng, n, names=("U", "V", "W")):
    if n == 1:
        return Var(rng.choice(names))
    k = rng.randint(1, n - 1)
    return Cross(_random_term(rng, k, names), _random_term(rng, n - k, names))


def test_criterion_7_cubic_scaling():
    rng = random.Random(7)
    term = cubic_frame_term(Var("S"), Var("W"))
    bad = 0
    for _ in range(200):
        s, w, lam = _rand_vec(rng), _rand_vec(rng), _rand_q(rng)
        if eval_affine(term, {"S": s, "W": w * lam}) != eval_affine(term, {"S": s, "W": w}) * lam ** 3:
            bad += 1
    example = eval_affine(term, {"S": Vec3(1, 1, 0), "W": Vec3(0, 2, 2)})
    base = eval_affine(term, {"S": Vec3(1, 1, 0), "W": Vec3(0, 1, 1)})
    ok = bad == 0 and base == Vec3(3, 3, 0) and example == Vec3(24, 24, 0)
    report(7, ok, f"200 cases, {bad} violations; (3,3,0) -> {tuple(example)} under lambda=2")


def test_criterion_8_xuvec_transport():
    rng = random.Random(8)
    done, bad = 0, []
    while done < 100:
        # V crossed with a subterm free of V; the first case is (V x W) itself
        t = Cross(Var("V"), Var("W") if done == 0 else _random_term(rng, rng.randint(1, 4), ("U", "W")))
        a = {n: _rand_vec(rng) for n in ("U", "V", "W")}
        if eval_affine(t, a).is_zero():
            continue
        done += 1
        tr = xuvec_from_nontriv(t, Witness(a))
        O = tr.rotation
        if not (eval_affine(t, tr.witness.assignment) == E3 and O @ O.transpose() == Mat3.identity()
                and O.det() == 1
                and verify_witness(ProblemInstance("XUVEC", "affine", (t,)), tr.witness)):
            bad.append(t)
    report(8, not bad, f"{done} transports, {len(bad)} not exactly (0,0,1) with a proper rotation")


def test_criterion_9_schwartz_zippel():
    nonzero = [sos(coordinatize(t)) for t in SMALL_CORPUS if leaf_count(t) >= 2]
    nonzero = [c for c in nonzero if not expand_circuit(c).is_zero()]
    calls, misses, bad = 100_000, 0, 0
    for i in range(calls):
        c = nonzero[i % len(nonzero)]
        res = pit_random(c, k=1, seed=i, trials=1, sample_size=4 * degree_bound(c))
        if isinstance(res, NonZero):
            if not (res.value != 0 and eval_circuit(c, res.witness) == [res.value]):
                bad += 1
        else:
            misses += 1
    rate = misses / calls
    report(9, bad == 0 and rate <= 0.35,
           f"{calls} calls on {len(nonzero)} nonzero circuits, {bad} bad witnesses, "
           f"miss rate {rate:.4f}")
