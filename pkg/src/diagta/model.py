"""Timed automata: data model, a small text format, and LU bound extraction."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dbm import INF, NEG_INF, ZERO, Bound, Weight


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, order=True)
class AtomicGuard:
    """``x - y ◁ c``; either side may be the zero clock."""

    x: str
    y: str
    strict: bool
    c: int

    def __post_init__(self) -> None:
        if self.x == self.y:
            raise ValueError(f"atomic guard on {self.x} - {self.x}")

    @property
    def weight(self) -> Weight:
        return Weight(self.c, not self.strict)

    @property
    def is_diagonal(self) -> bool:
        return self.x != ZERO and self.y != ZERO

    def triple(self) -> tuple[str, str, Weight]:
        return (self.x, self.y, self.weight)

    def holds(self, diff) -> bool:
        return diff < self.c if self.strict else diff <= self.c

    def negation(self) -> AtomicGuard:
        """``not (x - y ◁ c)`` is ``y - x ◁' -c`` with the opposite strictness."""
        return AtomicGuard(self.y, self.x, not self.strict, -self.c)

    def __str__(self) -> str:
        return format_atom(self)


@dataclass(frozen=True)
class Transition:
    source: str
    guard: tuple[AtomicGuard, ...]
    resets: frozenset[str]
    target: str

    def guard_triples(self) -> list[tuple[str, str, Weight]]:
        return [g.triple() for g in self.guard]


@dataclass(frozen=True)
class TimedAutomaton:
    states: tuple[str, ...]
    clocks: tuple[str, ...]
    initial: str
    accepting: frozenset[str]
    transitions: tuple[Transition, ...]

    def __post_init__(self) -> None:
        if ZERO in self.clocks:
            raise ValueError("the zero clock is implicit and cannot be declared")
        if len(set(self.clocks)) != len(self.clocks):
            raise ValueError("duplicate clock")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state")
        known = set(self.states)
        if self.initial not in known:
            raise ValueError(f"initial state {self.initial!r} not declared")
        if not self.accepting <= known:
            raise ValueError(f"accepting states {sorted(self.accepting - known)} not declared")
        clocks = set(self.clocks) | {ZERO}
        for t in self.transitions:
            if t.source not in known or t.target not in known:
                raise ValueError(f"transition {t.source} -> {t.target} uses undeclared state")
            for g in t.guard:
                if g.x not in clocks or g.y not in clocks:
                    raise ValueError(f"guard {g} uses undeclared clock")
            if not t.resets <= set(self.clocks):
                raise ValueError(f"reset of undeclared clock in {t.source} -> {t.target}")

    @property
    def all_clocks(self) -> tuple[str, ...]:
        return (ZERO,) + self.clocks

    def guards(self) -> list[AtomicGuard]:
        return [g for t in self.transitions for g in t.guard]

    def diagonal_atoms(self) -> list[AtomicGuard]:
        seen: dict[AtomicGuard, None] = {}
        for g in self.guards():
            if g.is_diagonal:
                seen.setdefault(g, None)
        return list(seen)

    def outgoing(self, state: str) -> list[tuple[int, Transition]]:
        return [(i, t) for i, t in enumerate(self.transitions) if t.source == state]


# --- guards -------------------------------------------------------------------


def normalize_guard(x: str, y: str, op: str, c: int) -> list[AtomicGuard]:
    """Rewrite ``x - y op c`` into ``<``/``<=`` atoms."""
    if op == "<=":
        return [AtomicGuard(x, y, False, c)]
    if op == "<":
        return [AtomicGuard(x, y, True, c)]
    if op == ">=":
        return [AtomicGuard(y, x, False, -c)]
    if op == ">":
        return [AtomicGuard(y, x, True, -c)]
    if op in ("=", "=="):
        return [AtomicGuard(x, y, False, c), AtomicGuard(y, x, False, -c)]
    raise ValueError(f"unknown comparator {op!r}")


def format_atom(g: AtomicGuard) -> str:
    """Surface syntax for an atom, using only natural constants where possible."""
    op = "<" if g.strict else "<="
    rop = ">" if g.strict else ">="
    if g.y == ZERO:
        return f"{g.x} {op} {g.c}"
    if g.x == ZERO:
        if g.c > 0 or (g.c == 0 and not g.strict):
            return f"{g.y} >= 0"  # always true for non-negative clocks
        return f"{g.y} {rop} {-g.c}"
    if g.c >= 0:
        return f"{g.x} - {g.y} {op} {g.c}"
    return f"{g.y} - {g.x} {rop} {-g.c}"


# --- text format ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_.]*)|(?P<op><=|>=|==|<|>|=)|(?P<sym>&&|->|[-&;{},]))")


class _Lexer:
    def __init__(self, text: str, line: int, offset: int = 0) -> None:
        self.text = text
        self.line = line
        self.pos = offset
        self.toks: list[tuple[str, str, int]] = []
        while True:
            while self.pos < len(text) and text[self.pos].isspace():
                self.pos += 1
            if self.pos >= len(text):
                break
            m = _TOKEN.match(text, self.pos)
            if not m:
                raise ParseError(f"unexpected character {text[self.pos]!r}", line, self.pos + 1)
            kind = m.lastgroup
            assert kind is not None
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start + 1))
            self.pos = m.end()
        self.end_col = len(text) + 1
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self, what: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"expected {what}, found end of line", self.line, self.end_col)
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None, what: str = "") -> str:
        tok = self.next(what or value or kind)
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise ParseError(f"expected {what or value or kind}, found {tok[1]!r}", self.line, tok[2])
        return tok[1]

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == kind and (value is None or tok[1] == value)


def _parse_constraint(lx: _Lexer) -> tuple[str, str, str, int, int]:
    """``x [- y] op c`` or ``-x op c``; returns (x, y, op, c, column)."""
    col = lx.peek()[2] if lx.peek() else lx.end_col
    if lx.at("sym", "-"):
        lx.next("-")
        y = lx.expect("id", what="clock")
        x = ZERO
    else:
        x = lx.expect("id", what="clock")
        y = ZERO
        if lx.at("sym", "-"):
            lx.next("-")
            y = lx.expect("id", what="clock")
    op = lx.expect("op", what="comparator")
    tok = lx.next("integer constant")
    if tok[0] != "num":
        raise ParseError(f"expected natural constant, found {tok[1]!r}", lx.line, tok[2])
    return x, y, op, int(tok[1]), col


def parse_automaton(text: str) -> TimedAutomaton:
    clocks: list[str] = []
    states: list[str] = []
    initial: str | None = None
    accepting: set[str] = set()
    pending: list[tuple[int, tuple, list, list, tuple]] = []
    seen_clocks = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        lx = _Lexer(line, lineno)
        kw_tok = lx.next("keyword")
        kw = kw_tok[1]
        if kw_tok[0] != "id":
            raise ParseError(f"expected keyword, found {kw!r}", lineno, kw_tok[2])
        if kw == "clocks":
            if seen_clocks:
                raise ParseError("clocks declared twice", lineno, kw_tok[2])
            seen_clocks = True
            while lx.peek() is not None:
                tok = lx.next("clock")
                if tok[0] != "id":
                    if tok[1] == ",":
                        continue
                    raise ParseError(f"expected clock name, found {tok[1]!r}", lineno, tok[2])
                if tok[1] in clocks or tok[1] == ZERO:
                    raise ParseError(f"duplicate clock {tok[1]!r}", lineno, tok[2])
                clocks.append(tok[1])
        elif kw == "state":
            tok = lx.next("state name")
            if tok[0] != "id":
                raise ParseError(f"expected state name, found {tok[1]!r}", lineno, tok[2])
            name = tok[1]
            if name in states:
                raise ParseError(f"duplicate state {name!r}", lineno, tok[2])
            states.append(name)
            while lx.peek() is not None:
                flag = lx.next("flag")
                if flag[1] == "initial":
                    if initial is not None and initial != name:
                        raise ParseError("second initial state", lineno, flag[2])
                    initial = name
                elif flag[1] == "accepting":
                    accepting.add(name)
                else:
                    raise ParseError(f"unknown state flag {flag[1]!r}", lineno, flag[2])
        elif kw == "trans":
            src_tok = lx.next("source state")
            if src_tok[0] != "id":
                raise ParseError(f"expected state name, found {src_tok[1]!r}", lineno, src_tok[2])
            lx.expect("sym", "->")
            dst_tok = lx.next("target state")
            if dst_tok[0] != "id":
                raise ParseError(f"expected state name, found {dst_tok[1]!r}", lineno, dst_tok[2])
            raw_guard: list[tuple[str, str, str, int, int]] = []
            resets: list[tuple[str, int]] = []
            if lx.at("id", "when"):
                lx.next("when")
                if lx.at("id", "true"):
                    lx.next("true")
                else:
                    raw_guard.append(_parse_constraint(lx))
                    while lx.at("sym", "&") or lx.at("sym", "&&") or lx.at("sym", ";"):
                        lx.next("separator")
                        raw_guard.append(_parse_constraint(lx))
            if lx.at("id", "reset"):
                lx.next("reset")
                lx.expect("sym", "{")
                if not lx.at("sym", "}"):
                    while True:
                        tok = lx.next("clock")
                        if tok[0] != "id":
                            raise ParseError(f"expected clock name, found {tok[1]!r}", lineno, tok[2])
                        resets.append((tok[1], tok[2]))
                        if lx.at("sym", ","):
                            lx.next(",")
                            continue
                        break
                lx.expect("sym", "}")
            if lx.peek() is not None:
                tok = lx.peek()
                raise ParseError(f"unexpected {tok[1]!r}", lineno, tok[2])
            pending.append((lineno, src_tok, raw_guard, resets, dst_tok))
        else:
            raise ParseError(f"unknown keyword {kw!r}", lineno, kw_tok[2])

    if not states:
        raise ParseError("no states declared", 1, 1)
    if initial is None:
        raise ParseError("no initial state", 1, 1)
    known_clocks = set(clocks) | {ZERO}
    transitions = []
    for lineno, (_, src, scol), raw_guard, resets, (_, dst, dcol) in pending:
        if src not in states:
            raise ParseError(f"undeclared state {src!r}", lineno, scol)
        if dst not in states:
            raise ParseError(f"undeclared state {dst!r}", lineno, dcol)
        atoms: list[AtomicGuard] = []
        for x, y, op, c, col in raw_guard:
            for name in (x, y):
                if name not in known_clocks:
                    raise ParseError(f"undeclared clock {name!r}", lineno, col)
            if x == y:
                raise ParseError(f"constraint compares {x} with itself", lineno, col)
            atoms.extend(normalize_guard(x, y, op, c))
        for name, col in resets:
            if name not in clocks:
                raise ParseError(f"undeclared clock {name!r}", lineno, col)
        transitions.append(Transition(src, tuple(atoms), frozenset(n for n, _ in resets), dst))
    return TimedAutomaton(tuple(states), tuple(clocks), initial, frozenset(accepting), tuple(transitions))


def write_automaton(a: TimedAutomaton) -> str:
    """Serialize in the text format; ``parse_automaton`` reads it back.

    Atoms that hold for every non-negative valuation are dropped and
    transitions with an unsatisfiable atom are omitted.
    """
    lines = []
    if a.clocks:
        lines.append("clocks " + " ".join(a.clocks))
    for q in a.states:
        flags = (["initial"] if q == a.initial else []) + (["accepting"] if q in a.accepting else [])
        lines.append(" ".join(["state", q] + flags))
    for t in a.transitions:
        parts = []
        dead = False
        for g in t.guard:
            if g.x == ZERO and g.c >= 0 and (g.c > 0 or not g.strict):
                continue
            if g.y == ZERO and (g.c < 0 or (g.c == 0 and g.strict)):
                dead = True
                break
            parts.append(format_atom(g))
        if dead:
            continue
        text = f"trans {t.source} -> {t.target}"
        if parts:
            text += " when " + " & ".join(parts)
        if t.resets:
            text += " reset {" + ", ".join(c for c in a.clocks if c in t.resets) + "}"
        lines.append(text)
    return "\n".join(lines) + "\n"


# --- LU bounds ----------------------------------------------------------------


@dataclass(frozen=True)
class LUBounds:
    """``L[(x, y)]`` and ``U[(x, y)]`` bound the difference ``x - y``.

    Missing pairs read as ``(INF, NEG_INF)``.  ``clocks`` includes the zero clock.
    """

    clocks: tuple[str, ...]
    L: Mapping[tuple[str, str], Bound] = field(default_factory=dict)
    U: Mapping[tuple[str, str], Bound] = field(default_factory=dict)

    def lower(self, x: str, y: str) -> Bound:
        return self.L.get((x, y), INF)

    def upper(self, x: str, y: str) -> Bound:
        return self.U.get((x, y), NEG_INF)

    def pairs(self) -> Iterable[tuple[str, str]]:
        for x in self.clocks:
            for y in self.clocks:
                if x != y:
                    yield x, y

    def violations(self, reset_closed: bool = True) -> list[str]:
        """Broken invariants, as messages (empty when well formed)."""
        out = []
        for x, y in self.pairs():
            lo, up = self.lower(x, y), self.upper(x, y)
            if not ((lo == INF and up == NEG_INF) or lo <= up):
                out.append(f"L({x}-{y})={lo} > U({x}-{y})={up}")
        for x in self.clocks[1:]:
            if self.lower(x, ZERO) != 0:
                out.append(f"L({x}-0) = {self.lower(x, ZERO)} != 0")
            if self.upper(ZERO, x) != 0:
                out.append(f"U(0-{x}) = {self.upper(ZERO, x)} != 0")
        if reset_closed:
            for x in self.clocks[1:]:
                for y in self.clocks:
                    if y in (x, ZERO):
                        continue
                    if self.upper(x, ZERO) < self.upper(x, y):
                        out.append(f"U({x}-0) < U({x}-{y})")
            for y in self.clocks[1:]:
                for x in self.clocks:
                    if x in (y, ZERO):
                        continue
                    if self.lower(x, y) < self.lower(ZERO, y):
                        out.append(f"L({x}-{y}) < L(0-{y})")
        return out

    def restrict_diagonal_free(self) -> LUBounds:
        """Drop all genuine-diagonal pairs, leaving the diagonal-free bounds."""
        keep = lambda k: ZERO in k  # noqa: E731
        return LUBounds(
            self.clocks,
            {k: v for k, v in self.L.items() if keep(k)},
            {k: v for k, v in self.U.items() if keep(k)},
        )

    def max_constant(self) -> int:
        vals = [abs(v) for v in list(self.L.values()) + list(self.U.values()) if v not in (INF, NEG_INF)]
        return max(vals, default=0)


def _with_zero(clocks: Sequence[str]) -> tuple[str, ...]:
    clocks = tuple(clocks)
    return clocks if clocks and clocks[0] == ZERO else (ZERO,) + clocks


def lu_bounds_from_guards(clocks: Sequence[str], guards: Iterable[AtomicGuard]) -> LUBounds:
    """Min/max of the constants of the closed-up guard set, per clock pair."""
    clocks = _with_zero(clocks)
    closure: list[tuple[str, str, int]] = []
    for x in clocks[1:]:
        closure.append((x, ZERO, 0))
        closure.append((ZERO, x, 0))
    for g in guards:
        closure.append((g.x, g.y, g.c))
        if g.x != ZERO and g.y != ZERO:
            closure.append((g.x, ZERO, g.c))
            closure.append((ZERO, g.y, g.c))
    L: dict[tuple[str, str], int] = {}
    U: dict[tuple[str, str], int] = {}
    for x, y, c in closure:
        if y == ZERO and c < 0:
            continue
        if x == ZERO and c > 0:
            continue
        key = (x, y)
        L[key] = min(L.get(key, c), c)
        U[key] = max(U.get(key, c), c)
    return LUBounds(clocks, L, U)


def compute_lu_bounds(a: TimedAutomaton) -> LUBounds:
    return lu_bounds_from_guards(a.all_clocks, a.guards())


def uniform_m_bounds(clocks: Sequence[str], M: int) -> LUBounds:
    if M < 0:
        raise ValueError("M must be non-negative")
    clocks = _with_zero(clocks)
    L: dict[tuple[str, str], int] = {}
    U: dict[tuple[str, str], int] = {}
    for x in clocks:
        for y in clocks:
            if x == y:
                continue
            if y == ZERO:
                L[(x, y)], U[(x, y)] = 0, M
            elif x == ZERO:
                L[(x, y)], U[(x, y)] = -M, 0
            else:
                L[(x, y)], U[(x, y)] = -M, M
    return LUBounds(clocks, L, U)
