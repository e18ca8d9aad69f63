"""Reference automata built in code."""

from __future__ import annotations

from collections import deque

from .model import AtomicGuard, TimedAutomaton, Transition

_LOCS = ("A", "B", "C", "CS")


def _name(locs: tuple[str, ...], ident: int) -> str:
    return "_".join(locs) + f"_id{ident}"


def fischer(n: int, k: int = 2) -> TimedAutomaton:
    """Fischer-style mutual exclusion for ``n`` processes, as one product automaton.

    Process ``i`` owns clocks ``x<i>`` (time since it wrote the shared id) and
    ``y<i>`` (time since it saw the id free).  It may enter the critical section
    only if its write came at most ``k`` after the request, a diagonal test
    ``y<i> - x<i> <= k``, and more than ``k`` has passed since the write.
    Accepting states are those with two processes in the critical section, so
    a correct protocol makes them unreachable.
    """
    if n < 1:
        raise ValueError("need at least one process")
    clocks = tuple(c for i in range(1, n + 1) for c in (f"x{i}", f"y{i}"))
    start = (("A",) * n, 0)
    seen = {start: _name(*start)}
    queue = deque([start])
    trans: list[Transition] = []
    while queue:
        locs, ident = queue.popleft()
        src = seen[(locs, ident)]
        for i in range(1, n + 1):
            x, y = f"x{i}", f"y{i}"
            here = locs[i - 1]
            moves: list[tuple[str, int, tuple[AtomicGuard, ...], frozenset[str]]] = []
            if here == "A" and ident == 0:
                moves.append(("B", ident, (), frozenset({y})))
            elif here == "B":
                moves.append(("C", i, (), frozenset({x})))
            elif here == "C" and ident == i:
                guard = (AtomicGuard("0", x, True, -k), AtomicGuard(y, x, False, k))
                moves.append(("CS", ident, guard, frozenset()))
            elif here == "C":
                moves.append(("A", ident, (), frozenset()))
            elif here == "CS":
                moves.append(("A", 0, (), frozenset()))
            for loc, new_id, guard, resets in moves:
                nxt = (locs[: i - 1] + (loc,) + locs[i:], new_id)
                if nxt not in seen:
                    seen[nxt] = _name(*nxt)
                    queue.append(nxt)
                trans.append(Transition(src, guard, resets, seen[nxt]))
    accepting = frozenset(name for (locs, _), name in seen.items() if locs.count("CS") >= 2)
    return TimedAutomaton(tuple(seen.values()), clocks, seen[start], accepting, tuple(trans))
