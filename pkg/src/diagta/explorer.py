"""Zone-graph exploration with Passed/Waiting lists and pluggable pruning,
plus the state-splitting translation to diagonal-free automata."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable

from .dbm import ZERO, Zone, elapse, intersect_guard, is_subset, reset, zero_zone
from .model import AtomicGuard, LUBounds, TimedAutomaton, Transition, compute_lu_bounds
from .simulation import is_simulated

PRUNE_MODES = ("lu-d", "inclusion", "none")
ORDERS = ("bfs", "dfs")


@dataclass(frozen=True)
class Node:
    state: str
    zone: Zone


@dataclass
class ExplorationStats:
    nodes_visited: int = 0
    nodes_pruned: int = 0
    simulation_tests: int = 0
    verdict: str = "unreachable"
    path: list[int] | None = None
    states_path: list[str] | None = None

    def as_dict(self) -> dict:
        return {
            "nodes_visited": self.nodes_visited,
            "nodes_pruned": self.nodes_pruned,
            "simulation_tests": self.simulation_tests,
            "verdict": self.verdict,
            "path": self.path,
            "states": self.states_path,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def to_text(self) -> str:
        lines = [
            f"verdict: {self.verdict}",
            f"nodes_visited: {self.nodes_visited}",
            f"nodes_pruned: {self.nodes_pruned}",
            f"simulation_tests: {self.simulation_tests}",
        ]
        if self.path is not None:
            lines.append("path: " + (" ".join(str(t) for t in self.path) or "(empty)"))
            lines.append("states: " + " ".join(self.states_path or []))
        return "\n".join(lines)


def initial_node(a: TimedAutomaton) -> Node:
    return Node(a.initial, elapse(zero_zone(a.all_clocks)))


def successor(n: Node | Zone, t: Transition) -> Zone | None:
    """Guard, then reset, then let time elapse."""
    z = n.zone if isinstance(n, Node) else n
    g = intersect_guard(z, t.guard_triples())
    if g is None:
        return None
    return elapse(reset(g, t.resets))


def reach(
    a: TimedAutomaton,
    prune: str = "lu-d",
    order: str = "bfs",
    backend: str = "oracle",
    solver=None,
    node_budget: int = 100_000,
    lu: LUBounds | None = None,
) -> ExplorationStats:
    """Is an accepting state reachable?  Stops at the first accepting successor.

    A new zone is dropped when some stored node of the same state covers it
    (simulation for ``lu-d``, inclusion for ``inclusion``, never for ``none``).
    Exceeding ``node_budget`` stored nodes yields the verdict ``inconclusive``.
    """
    if prune not in PRUNE_MODES:
        raise ValueError(f"unknown prune mode {prune!r}")
    if order not in ORDERS:
        raise ValueError(f"unknown order {order!r}")
    if node_budget <= 0:
        raise ValueError("node budget must be positive")
    if prune == "lu-d" and lu is None:
        lu = compute_lu_bounds(a)
    stats = ExplorationStats()

    covers: Callable[[Zone, Zone], bool]
    if prune == "lu-d":
        assert lu is not None
        bounds = lu

        def covers(new: Zone, old: Zone) -> bool:
            stats.simulation_tests += 1
            return is_simulated(new, old, bounds, backend, solver)

    elif prune == "inclusion":

        def covers(new: Zone, old: Zone) -> bool:
            stats.simulation_tests += 1
            return is_subset(new, old)

    else:

        def covers(new: Zone, old: Zone) -> bool:
            return False

    # parent links: node id -> (parent id, transition id)
    parents: list[tuple[int, int]] = [(-1, -1)]
    nodes: list[Node] = [initial_node(a)]
    by_state: dict[str, list[int]] = {a.initial: [0]}
    stats.nodes_visited = 1
    if a.initial in a.accepting:
        return _finish(stats, a, parents, nodes, 0)

    waiting: deque[int] = deque([0])
    out_edges = {q: a.outgoing(q) for q in a.states}
    while waiting:
        cur = waiting.popleft() if order == "bfs" else waiting.pop()
        node = nodes[cur]
        for tid, t in out_edges[node.state]:
            z = successor(node, t)
            if z is None:
                continue
            if t.target in a.accepting:
                nodes.append(Node(t.target, z))
                parents.append((cur, tid))
                stats.nodes_visited += 1
                return _finish(stats, a, parents, nodes, len(nodes) - 1)
            same = by_state.setdefault(t.target, [])
            if any(covers(z, nodes[k].zone) for k in reversed(same)):
                stats.nodes_pruned += 1
                continue
            if stats.nodes_visited >= node_budget:
                stats.verdict = "inconclusive"
                return stats
            nodes.append(Node(t.target, z))
            parents.append((cur, tid))
            same.append(len(nodes) - 1)
            stats.nodes_visited += 1
            waiting.append(len(nodes) - 1)
    stats.verdict = "unreachable"
    return stats


def _finish(stats: ExplorationStats, a: TimedAutomaton, parents, nodes, k: int) -> ExplorationStats:
    path: list[int] = []
    states = [nodes[k].state]
    while parents[k][0] >= 0:
        p, tid = parents[k]
        path.append(tid)
        states.append(nodes[p].state)
        k = p
    stats.verdict = "reachable"
    stats.path = path[::-1]
    stats.states_path = states[::-1]
    return stats


def replay_path(a: TimedAutomaton, path: Iterable[int]) -> Node | None:
    """Run ``path`` (transition ids) from the initial node; None if a step is impossible."""
    node = initial_node(a)
    for tid in path:
        t = a.transitions[tid]
        if t.source != node.state:
            return None
        z = successor(node, t)
        if z is None:
            return None
        node = Node(t.target, z)
    return node


# --- diagonal-free translation ------------------------------------------------


def _state_name(q: str, bits: tuple[bool, ...]) -> str:
    return f"{q}__b" + "".join("1" if b else "0" for b in bits)


def _holds_at_zero(g: AtomicGuard) -> bool:
    return g.holds(0)


def convert_diag_free(a: TimedAutomaton) -> TimedAutomaton:
    """Equivalent automaton without clock-difference guards.

    Each state is paired with the truth values of the ``d`` diagonal atoms.
    Guards read diagonal atoms from those bits.  After a reset the bit of an
    atom ``x - y ◁ c`` is recomputed: unchanged if neither clock is reset,
    constant if both are, and otherwise determined by a single-clock test on
    the surviving clock, which the transition is split on.
    """
    diags = a.diagonal_atoms()
    d = len(diags)
    if d == 0:
        return a
    index = {g: k for k, g in enumerate(diags)}
    vectors = list(product((False, True), repeat=d))
    states = tuple(_state_name(q, b) for q in a.states for b in vectors)
    init_bits = tuple(_holds_at_zero(g) for g in diags)
    accepting = frozenset(_state_name(q, b) for q in a.accepting for b in vectors)

    trans: list[Transition] = []
    for t in a.transitions:
        plain = tuple(g for g in t.guard if not g.is_diagonal)
        needed = {index[g] for g in t.guard if g.is_diagonal}
        # per atom: list of (bit after the step, extra non-diagonal guard) alternatives
        updates: list[list[tuple[bool | None, tuple[AtomicGuard, ...]]]] = []
        for g in diags:
            rx, ry = g.x in t.resets, g.y in t.resets
            if not rx and not ry:
                updates.append([(None, ())])
            elif rx and ry:
                updates.append([(_holds_at_zero(g), ())])
            elif rx:
                # new value 0 - y, tested before the reset on y (untouched)
                test = AtomicGuard(ZERO, g.y, g.strict, g.c)
                updates.append([(True, (test,)), (False, (test.negation(),))])
            else:
                test = AtomicGuard(g.x, ZERO, g.strict, g.c)
                updates.append([(True, (test,)), (False, (test.negation(),))])
        for bits in vectors:
            if any(not bits[k] for k in needed):
                continue
            for combo in product(*updates):
                new_bits = tuple(bits[k] if nb is None else nb for k, (nb, _) in enumerate(combo))
                extra = tuple(x for _, gs in combo for x in gs)
                guard = _dedupe(plain + extra)
                if guard is None:
                    continue
                trans.append(Transition(_state_name(t.source, bits), guard, t.resets, _state_name(t.target, new_bits)))
    return TimedAutomaton(states, a.clocks, _state_name(a.initial, init_bits), accepting, tuple(trans))


def _dedupe(guard: tuple[AtomicGuard, ...]) -> tuple[AtomicGuard, ...] | None:
    """Drop repeated atoms and whole transitions with a trivially unsatisfiable pair."""
    seen: dict[AtomicGuard, None] = {}
    for g in guard:
        seen.setdefault(g, None)
    atoms = list(seen)
    for g in atoms:
        if g.negation() in seen:
            return None
        if g.y == ZERO and (g.c < 0 or (g.c == 0 and g.strict)):
            return None
    return tuple(atoms)
