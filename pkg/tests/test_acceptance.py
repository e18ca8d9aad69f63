"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (with its measurements) that the
session prints at the end; ``python tests/test_acceptance.py`` prints them
directly.
"""

from __future__ import annotations

import functools
import itertools
import random
import sys
import time
from fractions import Fraction

from diagta.dbm import LE_ZERO, UNBOUNDED, Weight, canonicalize, weight_add, weight_lt
from diagta.explorer import convert_diag_free, reach, replay_path
from diagta.generators import (
    clock_names,
    perturbed_zone,
    random_automaton,
    random_free_valuation,
    random_graph,
    random_lu,
    random_point_zone,
    random_valuation,
    random_zone,
)
from diagta.hardness import UNSAT8, Cnf3, all_clauses, build_instance, check_reduction, random_cnf3, sat_bruteforce
from diagta.model import compute_lu_bounds
from diagta.models import fischer
from diagta.simulation import check_simulation, gvlu_graph, not_simulated_bruteforce, simulates_valuation, verify_witness

RESULTS: dict[int, str] = {}


def record(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})"


# --- 1. weight arithmetic ---------------------------------------------------------


def test_c1_weight_laws():
    t0 = time.perf_counter()
    ws = [Weight(c, b) for c in range(-8, 9) for b in (False, True)] + [UNBOUNDED]
    bad = 0
    for a, b in itertools.product(ws, repeat=2):
        bad += weight_add(a, b) != weight_add(b, a)
        # total order: exactly one of <, =, > holds
        bad += (weight_lt(a, b) + (a == b) + weight_lt(b, a)) != 1
    for a, b, c in itertools.product(ws, repeat=3):
        bad += weight_add(weight_add(a, b), c) != weight_add(a, weight_add(b, c))
        bad += weight_lt(a, b) and weight_lt(b, c) and not weight_lt(a, c)
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 1.0
    record(1, ok, f"{len(ws)} weights, {bad} violations, {dt:.2f} s, limit 1 s")
    assert ok, RESULTS[1]


# --- 2. canonical form --------------------------------------------------------------


def _negative_cycle(g) -> bool:
    n = g.dim
    m = [list(r) for r in g.m]
    for x in range(1, n):
        if LE_ZERO < m[x][0]:
            m[x][0] = LE_ZERO  # clocks are nonnegative
    for k in range(2, n + 1):
        for cyc in itertools.permutations(range(n), k):
            if cyc[0] != min(cyc):
                continue
            total = LE_ZERO
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                total = total + m[a][b]
            if total < LE_ZERO:
                return True
    return False


def test_c2_canonicalization_oracle():
    t0 = time.perf_counter()
    rng = random.Random(2002)
    clocks = clock_names(4)
    verdict_bad = member_bad = empties = 0
    for _ in range(1000):
        g = random_graph(rng, clocks, -5, 5, density=rng.choice([0.1, 0.25, 0.5]))
        z = canonicalize(g)
        verdict_bad += (z is None) != _negative_cycle(g)
        empties += z is None
        for k in range(100):
            if z is not None and k % 2:
                v = random_valuation(rng, z)
            else:
                v = random_free_valuation(rng, clocks, 2)
            member_bad += g.contains(v) != (z is not None and z.contains(v))
    dt = time.perf_counter() - t0
    ok = verdict_bad == 0 and member_bad == 0 and dt < 30
    record(2, ok, f"1000 graphs ({empties} empty), {verdict_bad} verdict and {member_bad} membership mismatches, {dt:.1f} s, limit 30 s")
    assert ok, RESULTS[2]


# --- 3. simulation axioms -------------------------------------------------------------


def _simulating(rng, v, lu):
    """A random valuation that simulates ``v``."""
    g = canonicalize(gvlu_graph(v, lu))
    return random_valuation(rng, g)


def test_c3_simulation_axioms():
    t0 = time.perf_counter()
    rng = random.Random(3003)
    counts = dict.fromkeys(("reflexivity", "transitivity", "delay", "reset", "guard"), 0)
    bad = dict.fromkeys(counts, 0)
    triples = 0
    while triples < 1000:
        a = random_automaton(rng, rng.randint(2, 3), rng.randint(2, 4), rng.randint(1, 6), 3)
        lu = compute_lu_bounds(a)
        clocks = a.all_clocks
        v = random_free_valuation(rng, clocks, 3)
        w = _simulating(rng, v, lu)
        u = _simulating(rng, w, lu)
        triples += 1
        counts["reflexivity"] += 1
        bad["reflexivity"] += not simulates_valuation(v, v, lu)
        counts["transitivity"] += 1
        bad["transitivity"] += not (simulates_valuation(v, w, lu) and simulates_valuation(w, u, lu) and simulates_valuation(v, u, lu))
        for _ in range(3):
            d = Fraction(rng.randint(0, 24), rng.choice([1, 2, 3, 4]))
            counts["delay"] += 1
            bad["delay"] += not simulates_valuation(v.delay(d), w.delay(d), lu)
        for t in a.transitions:
            counts["reset"] += 1
            bad["reset"] += not simulates_valuation(v.reset(t.resets), w.reset(t.resets), lu)
            for g in t.guard:
                if g.holds(v[g.x] - v[g.y]):
                    counts["guard"] += 1
                    bad["guard"] += not g.holds(w[g.x] - w[g.y])
    dt = time.perf_counter() - t0
    ok = sum(bad.values()) == 0
    detail = ", ".join(f"{k} {bad[k]}/{counts[k]}" for k in counts)
    record(3, ok, f"violations: {detail}; {dt:.1f} s")
    assert ok, RESULTS[3]


# --- 4. backend agreement ------------------------------------------------------------------


def _zone_pair(rng):
    clocks = clock_names(rng.randint(1, 4))
    r = rng.random()
    if r < 0.3:
        z, z2 = random_point_zone(rng, clocks, cmax=4), random_point_zone(rng, clocks, cmax=4)
    elif r < 0.5:
        z, z2 = random_zone(rng, clocks, cmax=4), random_zone(rng, clocks, cmax=4)
    else:
        z = random_zone(rng, clocks, cmax=4)
        z2 = perturbed_zone(rng, z)
    return z, z2, random_lu(rng, clocks, cmax=4, inf_prob=0.3)


def test_c4_backend_agreement(solver):
    t0 = time.perf_counter()
    rng = random.Random(4004)
    mismatches = witness_bad = not_sim = 0
    for _ in range(500):
        z, z2, lu = _zone_pair(rng)
        a = not_simulated_bruteforce(z, z2, lu)
        b = check_simulation(z, z2, lu, "smt", solver, shortcuts=False)
        mismatches += (a is None) != (b is None)
        for w in (a, b):
            if w is None:
                continue
            try:
                verify_witness(z, z2, lu, w, recheck=True)
            except AssertionError:
                witness_bad += 1
        not_sim += b is not None
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and witness_bad == 0 and dt < 300
    record(4, ok, f"500 pairs ({not_sim} not simulated), {mismatches} mismatches, {witness_bad} bad witnesses, {dt:.1f} s, limit 300 s")
    assert ok, RESULTS[4]


# --- 5. hardness reduction end to end -----------------------------------------------------------


def _formulas():
    singles = [[c] for c in all_clauses()]
    pairs = [list(p) for p in itertools.combinations(all_clauses(), 2)]
    rng = random.Random(5005)
    rand = [random_cnf3(rng, 4, 4) for _ in range(50)]
    return [Cnf3.from_ints(c, 3) for c in singles + pairs + [UNSAT8]] + rand


def test_c5_reduction_agreement(solver):
    t0 = time.perf_counter()
    formulas = _formulas()
    disagree = repr_bad = 0
    most_clocks = 0
    for phi in formulas:
        inst = build_instance(phi)
        most_clocks = max(most_clocks, len(inst.clocks) - 1)
        rep = check_reduction(phi, 4, "smt", solver, inst)
        disagree += not rep.agree
        repr_bad += rep.satisfiable and not rep.representatives_ok
    # the solver alone, without the exact vertex shortcut, on the one-clause instances
    raw_disagree = 0
    for clause in all_clauses():
        phi = Cnf3.from_ints([clause], 3)
        rep = check_reduction(phi, 4, "smt", solver, shortcuts=False)
        raw_disagree += not rep.agree
    dt = time.perf_counter() - t0
    ok = disagree == 0 and repr_bad == 0 and raw_disagree == 0 and dt < 600
    sat = sum(sat_bruteforce(p)[0] for p in formulas)
    record(
        5,
        ok,
        f"{len(formulas)} formulas ({sat} SAT), {disagree} disagreements, {repr_bad} representative failures, "
        f"solver-only {raw_disagree}/8, up to {most_clocks} clocks, {dt:.1f} s, limit 600 s",
    )
    assert ok, RESULTS[5]


# --- 6 and 7. reachability ------------------------------------------------------------------------


INCLUSION_BUDGET = 2000


@functools.lru_cache(maxsize=1)
def _reach_runs():
    rng = random.Random(6006)
    runs = []
    for _ in range(200):
        a = random_automaton(rng, rng.randint(2, 3), rng.randint(2, 4), rng.randint(1, 6), 3, min_diagonal=1)
        lud = reach(a, "lu-d")
        inc = reach(a, "inclusion", node_budget=INCLUSION_BUDGET)
        df = reach(convert_diag_free(a), "lu-d")
        runs.append((a, lud, inc, df))
    return runs


def test_c6_reachability_agreement():
    t0 = time.perf_counter()
    runs = _reach_runs()
    disagree = replay_bad = inconclusive = reachable = 0
    for a, lud, inc, df in runs:
        verdicts = {lud.verdict, df.verdict} | ({inc.verdict} if inc.verdict != "inconclusive" else set())
        inconclusive += inc.verdict == "inconclusive"
        disagree += len(verdicts) != 1 or "inconclusive" in verdicts
        for auto, s in ((a, lud), (a, inc), (convert_diag_free(a), df)):
            if s.verdict == "reachable":
                end = replay_path(auto, s.path)
                replay_bad += end is None or end.state not in auto.accepting or end.zone is None
        reachable += lud.verdict == "reachable"
    dt = time.perf_counter() - t0
    ok = disagree == 0 and replay_bad == 0 and dt < 300
    record(
        6,
        ok,
        f"200 automata ({reachable} reachable), {disagree} disagreements, {replay_bad} bad replays, "
        f"{inconclusive} inclusion runs hit the {INCLUSION_BUDGET}-node budget, {dt:.1f} s, limit 300 s",
    )
    assert ok, RESULTS[6]


def test_c7_lu_d_terminates():
    budget = 100_000
    runs = _reach_runs()
    hit = sum(lud.verdict == "inconclusive" or df.verdict == "inconclusive" for _, lud, _, df in runs)
    extra = [fischer(2), fischer(3)] + [convert_diag_free(fischer(2))]
    biggest = max(lud.nodes_visited for _, lud, _, _ in runs)
    for a in extra:
        s = reach(a, "lu-d", node_budget=budget)
        hit += s.verdict == "inconclusive"
        biggest = max(biggest, s.nodes_visited)
    ok = hit == 0
    record(7, ok, f"{len(runs) * 2 + len(extra)} explorations, {hit} hit the {budget}-node budget, largest {biggest} nodes")
    assert ok, RESULTS[7]


# --- 8. Fischer trend -------------------------------------------------------------------------------


def test_c8_fischer_trend():
    t0 = time.perf_counter()
    rows = []
    for n in (2, 3):
        a = fischer(n)
        lud = reach(a, "lu-d")
        df = reach(convert_diag_free(a), "lu-d")
        rows.append((n, lud.nodes_visited, df.nodes_visited, lud.verdict, df.verdict))
    dt = time.perf_counter() - t0
    ok = all(x <= y and v1 == v2 == "unreachable" for _, x, y, v1, v2 in rows)
    table = "; ".join(f"n={n}: {x} vs {y}" for n, x, y, _, _ in rows)
    record(8, ok, f"nodes visited lu-d vs diag-free: {table}, {dt:.1f} s")
    assert ok, RESULTS[8]


if __name__ == "__main__":
    from diagta.smt import SmtSolver

    tests = [
        (test_c1_weight_laws, ()),
        (test_c2_canonicalization_oracle, ()),
        (test_c3_simulation_axioms, ()),
        (test_c4_backend_agreement, (SmtSolver(),)),
        (test_c5_reduction_agreement, (SmtSolver(),)),
        (test_c6_reachability_agreement, ()),
        (test_c7_lu_d_terminates, ()),
        (test_c8_fischer_trend, ()),
    ]
    failed = 0
    for k, (fn, args) in enumerate(tests, start=1):
        try:
            fn(*args)
        except AssertionError:
            failed += 1
        print(RESULTS.get(k, f"criterion {k}: FAIL (error)"), flush=True)
    sys.exit(1 if failed else 0)
