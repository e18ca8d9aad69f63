"""Seeded random instances for property and differential tests."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .dbm import (
    INF,
    NEG_INF,
    UNBOUNDED,
    ZERO,
    DistanceGraph,
    Valuation,
    Weight,
    Zone,
    canonicalize,
)
from .model import AtomicGuard, LUBounds, TimedAutomaton, Transition


def clock_names(k: int) -> tuple[str, ...]:
    base = ["x", "y", "z", "w", "u", "t"]
    names = base[:k] if k <= len(base) else [f"c{i}" for i in range(1, k + 1)]
    return (ZERO,) + tuple(names)


def random_graph(
    rng: random.Random,
    clocks: Sequence[str],
    lo: int = -5,
    hi: int = 5,
    density: float = 0.5,
    strict_prob: float = 0.3,
) -> DistanceGraph:
    n = len(clocks)
    m = [[UNBOUNDED] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                m[i][j] = Weight(0, True)
            elif rng.random() < density:
                m[i][j] = Weight(rng.randint(lo, hi), rng.random() >= strict_prob)
    return DistanceGraph(tuple(clocks), m)


def random_zone(
    rng: random.Random,
    clocks: Sequence[str],
    cmax: int = 4,
    density: float = 0.4,
    strict_prob: float = 0.2,
    tries: int = 1000,
) -> Zone:
    """A non-empty canonical zone with constants in ``[-cmax, cmax]``."""
    for _ in range(tries):
        g = random_graph(rng, clocks, -cmax, cmax, density, strict_prob)
        z = canonicalize(g)
        if z is not None:
            return z
    raise RuntimeError("could not draw a non-empty zone")


def random_point_zone(rng: random.Random, clocks: Sequence[str], cmax: int = 4, spread: int = 1) -> Zone:
    """A small zone around a random integer point, useful for non-trivial simulation queries."""
    cons = []
    for c in clocks[1:]:
        a = rng.randint(0, cmax)
        b = a + rng.randint(0, spread)
        cons.append((c, ZERO, Weight(b, rng.random() < 0.8)))
        cons.append((ZERO, c, Weight(-a, rng.random() < 0.8)))
    z = canonicalize(DistanceGraph.from_constraints(clocks, cons))
    return z if z is not None else random_zone(rng, clocks, cmax)


def random_lu(rng: random.Random, clocks: Sequence[str], cmax: int = 4, inf_prob: float = 0.3) -> LUBounds:
    """Bounds obeying ``L <= U`` (or both infinite), ``L(x-0) = 0`` and ``U(0-x) = 0``."""
    L: dict[tuple[str, str], object] = {}
    U: dict[tuple[str, str], object] = {}
    for x in clocks:
        for y in clocks:
            if x == y:
                continue
            if y == ZERO:
                L[(x, y)], U[(x, y)] = 0, rng.randint(0, cmax)
            elif x == ZERO:
                L[(x, y)], U[(x, y)] = -rng.randint(0, cmax), 0
            elif rng.random() < inf_prob:
                L[(x, y)], U[(x, y)] = INF, NEG_INF
            else:
                a, b = sorted((rng.randint(-cmax, cmax), rng.randint(-cmax, cmax)))
                L[(x, y)], U[(x, y)] = a, b
    return LUBounds(tuple(clocks), L, U)  # type: ignore[arg-type]


def _pick(rng: random.Random, lo: Fraction, lo_closed: bool, hi: Fraction | None, hi_closed: bool) -> Fraction:
    if hi is None:
        hi, hi_closed = lo + rng.randint(1, 6), True
    if lo == hi:
        return lo
    choices = []
    if lo_closed:
        choices.append(lo)
    if hi_closed:
        choices.append(hi)
    if choices and rng.random() < 0.3:
        return rng.choice(choices)
    den = rng.choice([1, 2, 3, 4, 6])
    steps = int((hi - lo) * den)
    inner = [lo + Fraction(t, den) for t in range(1, steps + 1) if lo + Fraction(t, den) < hi]
    if inner:
        return rng.choice(inner)
    return (lo + hi) / 2


def random_valuation(rng: random.Random, z: Zone) -> Valuation:
    """A random rational point of a non-empty canonical zone."""
    n = z.dim
    vals: list[Fraction | None] = [Fraction(0)] + [None] * (n - 1)
    order = list(range(1, n))
    rng.shuffle(order)
    for x in order:
        lo, lo_closed = Fraction(0), True
        hi: Fraction | None = None
        hi_closed = True
        for y in range(n):
            vy = vals[y]
            if vy is None or y == x:
                continue
            up = z.m[y][x]  # v(x) - v(y) ◁ up
            if up.finite:
                b = vy + up.bound
                if hi is None or b < hi or (b == hi and not up.closed):
                    hi, hi_closed = Fraction(b), up.closed
            dn = z.m[x][y]  # v(y) - v(x) ◁ dn
            if dn.finite:
                b = vy - dn.bound
                if b > lo or (b == lo and not dn.closed):
                    lo, lo_closed = Fraction(b), dn.closed
        vals[x] = _pick(rng, lo, lo_closed, hi, hi_closed)
    v = Valuation(z.clocks, vals)  # type: ignore[arg-type]
    if not z.contains(v):
        raise AssertionError(f"random point {v} escaped {z}")
    return v


def random_free_valuation(rng: random.Random, clocks: Sequence[str], cmax: int = 6) -> Valuation:
    vals = [0] + [Fraction(rng.randint(0, 4 * cmax), rng.choice([1, 2, 4])) for _ in clocks[1:]]
    return Valuation(tuple(clocks), vals)


def random_atom(rng: random.Random, clocks: Sequence[str], cmax: int, diagonal: bool) -> AtomicGuard:
    real = list(clocks[1:]) if clocks and clocks[0] == ZERO else list(clocks)
    if diagonal and len(real) >= 2:
        x, y = rng.sample(real, 2)
    else:
        x = rng.choice(real)
        x, y = (x, ZERO) if rng.random() < 0.5 else (ZERO, x)
    c = rng.randint(0, cmax)
    if x == ZERO:
        c = -c
    return AtomicGuard(x, y, rng.random() < 0.3, c)


def random_automaton(
    rng: random.Random,
    n_clocks: int = 3,
    n_states: int = 4,
    n_trans: int = 6,
    cmax: int = 3,
    min_diagonal: int = 1,
) -> TimedAutomaton:
    """Random automaton; at least ``min_diagonal`` guards compare two clocks."""
    clocks = clock_names(n_clocks)[1:]
    states = tuple(f"q{i}" for i in range(n_states))
    accepting = frozenset({states[-1]}) if n_states > 1 else frozenset()
    trans = []
    for k in range(n_trans):
        src = rng.choice(states[:-1] or states)
        dst = rng.choice(states)
        n_atoms = rng.randint(0, 2)
        atoms = [random_atom(rng, (ZERO,) + clocks, cmax, rng.random() < 0.4) for _ in range(n_atoms)]
        if k < min_diagonal and len(clocks) >= 2:
            atoms.append(random_atom(rng, (ZERO,) + clocks, cmax, True))
        resets = frozenset(c for c in clocks if rng.random() < 0.35)
        trans.append(Transition(src, tuple(atoms), resets, dst))
    rng.shuffle(trans)
    return TimedAutomaton(states, clocks, states[0], accepting, tuple(trans))


def perturbed_zone(rng: random.Random, z: Zone, cmax: int = 4) -> Zone:
    """A zone whose finite bounds are those of ``z`` shifted by -1, 0 or +1 (strictness may flip)."""
    for _ in range(100):
        m = []
        for i, row in enumerate(z.m):
            new = []
            for j, w in enumerate(row):
                if i == j:
                    new.append(w)
                elif not w.finite:
                    new.append(w if rng.random() < 0.8 else Weight(rng.randint(-cmax, cmax), True))
                elif rng.random() < 0.15:
                    new.append(UNBOUNDED)
                else:
                    new.append(Weight(w.bound + rng.choice([-1, 0, 0, 1]), w.closed if rng.random() < 0.8 else not w.closed))
            m.append(new)
        out = canonicalize(DistanceGraph(z.clocks, m))
        if out is not None:
            return out
    return z
