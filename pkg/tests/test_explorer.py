from __future__ import annotations

import random

import pytest
from oracles import closed_copy, integer_reachable

from diagta.dbm import ZERO, Valuation, elapse, zero_zone
from diagta.explorer import convert_diag_free, initial_node, reach, replay_path, successor
from diagta.generators import random_automaton
from diagta.model import AtomicGuard, parse_automaton
from diagta.models import fischer

SIMPLE = """
clocks x y
state q0 initial
state q1
state bad accepting
trans q0 -> q1 when x >= 1 reset {y}
trans q1 -> bad when x - y >= 2
"""


def test_initial_node_and_successor():
    a = parse_automaton(SIMPLE)
    n = initial_node(a)
    assert n.state == "q0" and n.zone == elapse(zero_zone(("x", "y")))
    z = successor(n, a.transitions[0])
    assert z.contains(Valuation.of(("x", "y"), {"x": 3, "y": 2}))
    assert not z.contains(Valuation.of(("x", "y"), {"x": 0, "y": 0}))


def test_simple_reachability_and_path():
    a = parse_automaton(SIMPLE)
    for prune in ("lu-d", "inclusion", "none"):
        for order in ("bfs", "dfs"):
            s = reach(a, prune, order)
            assert s.verdict == "reachable"
            assert s.path == [0, 1] and s.states_path == ["q0", "q1", "bad"]
            end = replay_path(a, s.path)
            assert end.state == "bad" and end.zone is not None


def test_diagonal_blocks_the_path():
    a = parse_automaton(SIMPLE.replace("x - y >= 2", "x - y >= 2 && x - y <= 1"))
    for prune in ("lu-d", "inclusion"):
        assert reach(a, prune).verdict == "unreachable"


def test_initial_accepting():
    a = parse_automaton("state q initial accepting\n")
    s = reach(a)
    assert s.verdict == "reachable" and s.path == [] and s.nodes_visited == 1


def test_budget_gives_inconclusive():
    # a clock that is never reset keeps growing, so plain inclusion never stabilises
    a = parse_automaton("clocks x y\nstate q initial\nstate b accepting\ntrans q -> q when y >= 1 reset {y}\ntrans q -> b when x - y < 0\n")
    assert reach(a, "none", node_budget=50).verdict == "inconclusive"
    assert reach(a, "lu-d").verdict == "unreachable"
    with pytest.raises(ValueError):
        reach(a, node_budget=0)
    with pytest.raises(ValueError):
        reach(a, "widen")


def test_stats_serialisation():
    s = reach(parse_automaton(SIMPLE))
    d = s.as_dict()
    assert d["verdict"] == "reachable" and d["states"] == ["q0", "q1", "bad"]
    assert "nodes_visited: " in s.to_text() and '"path": [0, 1]' in s.to_json()


def test_replay_rejects_bad_paths():
    a = parse_automaton(SIMPLE)
    assert replay_path(a, [1]) is None
    assert replay_path(a, []).state == "q0"


def test_matches_integer_time_oracle():
    rng = random.Random(61)
    for _ in range(400):
        a = closed_copy(random_automaton(rng, rng.randint(2, 3), rng.randint(2, 4), rng.randint(1, 6), 3))
        expected = integer_reachable(a)
        for prune in ("lu-d", "inclusion"):
            s = reach(a, prune, rng.choice(("bfs", "dfs")), node_budget=400)
            if s.verdict == "inconclusive":
                assert prune == "inclusion"
                continue
            assert (s.verdict == "reachable") == expected
            if expected:
                end = replay_path(a, s.path)
                assert end is not None and end.state in a.accepting


# --- diagonal-free translation -------------------------------------------------------


def test_conversion_removes_diagonals():
    a = parse_automaton(SIMPLE)
    b = convert_diag_free(a)
    assert a.diagonal_atoms() and not b.diagonal_atoms()
    assert b.initial == "q0__b0"
    assert convert_diag_free(convert_diag_free(a)) == b
    plain = parse_automaton("clocks x\nstate q initial\ntrans q -> q when x <= 1 reset {x}\n")
    assert convert_diag_free(plain) == plain


def test_conversion_tracks_atom_after_reset():
    # after resetting y the atom x - y >= 2 holds exactly when x >= 2 held
    a = parse_automaton(SIMPLE)
    b = convert_diag_free(a)
    (atom,) = a.diagonal_atoms()
    assert atom == AtomicGuard("y", "x", False, -2)
    moves = [t for t in b.transitions if t.source == "q0__b0"]
    tests = {t.target: set(t.guard) for t in moves}
    assert AtomicGuard(ZERO, "x", False, -2) in tests["q1__b1"]
    assert AtomicGuard("x", ZERO, True, 2) in tests["q1__b0"]


def test_conversion_preserves_reachability():
    rng = random.Random(63)
    for _ in range(200):
        a = random_automaton(rng, rng.randint(2, 3), rng.randint(2, 4), rng.randint(1, 6), 3)
        assert reach(a).verdict == reach(convert_diag_free(a)).verdict


# --- reference model -------------------------------------------------------------------


def test_fischer_shape():
    a = fischer(2)
    assert a.clocks == ("x1", "y1", "x2", "y2")
    assert len(a.diagonal_atoms()) == 2
    assert a.initial == "A_A_id0"
    assert all(s.count("CS") == 2 for s in a.accepting)
    with pytest.raises(ValueError):
        fischer(0)


def test_fischer_is_safe_and_one_process_enters():
    assert reach(fischer(2)).verdict == "unreachable"
    one = fischer(1)
    target = next(s for s in one.states if s.startswith("CS"))
    one = type(one)(one.states, one.clocks, one.initial, frozenset({target}), one.transitions)
    assert reach(one).verdict == "reachable"
