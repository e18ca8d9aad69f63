"""The LU simulation for diagonal constraints, on valuations and on zones.

``Z`` is simulated by ``Z'`` when every ``v`` in ``Z`` has some ``v'`` in ``Z'``
with ``v ≼ v'``.  Non-simulation is certified by a valuation ``v`` in ``Z`` and a
negative cycle mixing edges of ``Z'`` (ZONE edges) with edges of the graph of
valuations simulating ``v`` (LU edges), no two ZONE edges in a row.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .dbm import (
    LE_ZERO,
    UNBOUNDED,
    DistanceGraph,
    Infinity,
    Valuation,
    Weight,
    Zone,
    canonicalize,
    is_closed,
    is_subset,
    min_graph,
    sample_valuation,
)
from .model import LUBounds

BACKENDS = ("oracle", "smt")


class EdgeColor(enum.Enum):
    ZONE = "zone"
    LU = "lu"


@dataclass(frozen=True)
class ColoredEdge:
    src: str
    dst: str
    color: EdgeColor
    weight: Weight

    def __str__(self) -> str:
        op = "<=" if self.weight.closed else "<"
        return f"{self.src} -> {self.dst} [{self.color.value}] ({op}, {self.weight.bound})"


@dataclass(frozen=True)
class SimWitness:
    v: Valuation
    cycle: tuple[ColoredEdge, ...]

    def total(self) -> Weight:
        return cycle_weight(self.cycle)

    def describe(self) -> str:
        vals = ", ".join(f"{c}={x}" for c, x in self.v.as_dict().items())
        lines = [f"v = ({vals})"]
        lines.extend("  " + str(e) for e in self.cycle)
        lines.append(f"  total {self.total()}")
        return "\n".join(lines)


class WitnessError(AssertionError):
    """A witness failed re-verification; this points at an implementation bug."""


def cycle_weight(edges: Sequence[ColoredEdge]) -> Weight:
    total = LE_ZERO
    for e in edges:
        total = total + e.weight
    return total


# --- valuations -------------------------------------------------------------


def _lu_edge(diff: Fraction, lo, up) -> Weight:
    if diff < lo:
        return Weight(lo, False)
    if diff <= up:
        return Weight(diff, True)
    return UNBOUNDED


def gvlu_graph(v: Valuation, lu: LUBounds) -> DistanceGraph:
    """Distance graph whose solutions are exactly the valuations simulating ``v``."""
    if tuple(lu.clocks) != v.clocks:
        raise ValueError(f"clock mismatch: {lu.clocks} vs {v.clocks}")
    n = len(v.clocks)
    vals = v.values
    m = [[UNBOUNDED] * n for _ in range(n)]
    for y in range(n):
        for x in range(n):
            if x == y:
                m[y][x] = LE_ZERO
                continue
            cx, cy = v.clocks[x], v.clocks[y]
            m[y][x] = _lu_edge(vals[x] - vals[y], lu.lower(cx, cy), lu.upper(cx, cy))
    return DistanceGraph(v.clocks, m)


def simulates_valuation(v: Valuation, v2: Valuation, lu: LUBounds) -> bool:
    """``v ≼ v2``, checked clause by clause over ordered clock pairs."""
    if v.clocks != v2.clocks:
        raise ValueError("valuations over different clocks")
    n = len(v.clocks)
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            lo = lu.lower(v.clocks[x], v.clocks[y])
            up = lu.upper(v.clocks[x], v.clocks[y])
            a = v.values[x] - v.values[y]
            b = v2.values[x] - v2.values[y]
            if a < lo and not b < lo:
                return False
            if lo <= a <= up and not b <= a:
                return False
    return True


def equiv_m(v: Valuation, v2: Valuation, M: int) -> bool:
    """Uniform-bound equivalence: every difference is below ``-M`` in both,
    equal within ``[-M, M]``, or above ``M`` in both."""
    if v.clocks != v2.clocks:
        raise ValueError("valuations over different clocks")
    n = len(v.clocks)
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            a = v.values[x] - v.values[y]
            b = v2.values[x] - v2.values[y]
            if a < -M and b < -M:
                continue
            if a > M and b > M:
                continue
            if -M <= a <= M and a == b:
                continue
            return False
    return True


# --- witnesses ----------------------------------------------------------------


def verify_witness(z: Zone, z2: Zone, lu: LUBounds, w: SimWitness, recheck: bool = False) -> None:
    """Raise :class:`WitnessError` unless ``w`` certifies that ``z`` is not simulated by ``z2``.

    A valid negative cycle already proves the emptiness; ``recheck`` also
    confirms it by canonicalizing the combined graph.
    """
    if not z.contains(w.v):
        raise WitnessError(f"witness valuation {w.v} is not in Z")
    cyc = w.cycle
    if not cyc:
        raise WitnessError("empty cycle")
    seen = set()
    for k, e in enumerate(cyc):
        nxt = cyc[(k + 1) % len(cyc)]
        if e.dst != nxt.src:
            raise WitnessError(f"edges {e} and {nxt} do not chain")
        if e.src in seen:
            raise WitnessError(f"vertex {e.src} repeated")
        seen.add(e.src)
        if e.color is EdgeColor.ZONE and nxt.color is EdgeColor.ZONE and len(cyc) > 1:
            raise WitnessError(f"consecutive zone edges {e} and {nxt}")
    gv = gvlu_graph(w.v, lu)
    for e in cyc:
        ref = (z2 if e.color is EdgeColor.ZONE else gv).bound(e.dst, e.src)
        if ref != e.weight or not e.weight.finite:
            raise WitnessError(f"edge {e} has weight {e.weight}, expected {ref}")
    if not cycle_weight(cyc) < LE_ZERO:
        raise WitnessError(f"cycle weight {cycle_weight(cyc)} is not negative")
    if recheck and canonicalize(min_graph(gv, z2)) is not None:
        raise WitnessError("valuations simulating v still meet Z'")


def _shortcut_reds(z2: Zone, cycle: list[tuple[int, int, bool]]) -> list[tuple[int, int, bool]]:
    """Merge runs of consecutive ZONE edges; canonicity of ``z2`` keeps the weight from rising."""
    changed = True
    while changed and len(cycle) > 2:
        changed = False
        for k in range(len(cycle)):
            a = cycle[k]
            b = cycle[(k + 1) % len(cycle)]
            if a[2] and b[2] and a[0] != b[1]:
                merged = (a[0], b[1], True)
                if (k + 1) % len(cycle) == 0:
                    cycle = [merged] + cycle[1:-1]
                else:
                    cycle = cycle[:k] + [merged] + cycle[k + 2 :]
                changed = True
                break
    return cycle


def witness_for_valuation(v: Valuation, z2: Zone, lu: LUBounds) -> SimWitness | None:
    """A negative alternating cycle for this ``v``, or None if some valuation of
    ``z2`` simulates ``v``.

    Bellman-Ford over weights read as ``c - k*eps`` (``k`` = number of strict
    edges), which orders cycles exactly as the weight order does.
    """
    gv = gvlu_graph(v, lu)
    n = len(v.clocks)
    # best edge per pair and whether it comes from z2
    edges: list[tuple[int, int, tuple, bool]] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = gv.m[i][j], z2.m[i][j]
            red = b < a
            w = b if red else a
            if w.finite:
                edges.append((i, j, (w.bound, 0 if w.closed else -1), red))
    dist = [(0, 0)] * n
    pred: list[tuple[int, bool] | None] = [None] * n
    last = -1
    for _ in range(n + 1):
        last = -1
        for i, j, (c, s), red in edges:
            cand = (dist[i][0] + c, dist[i][1] + s)
            if cand < dist[j]:
                dist[j] = cand
                pred[j] = (i, red)
                last = j
        if last < 0:
            return None
    # walk back n steps to land on the cycle
    x = last
    for _ in range(n):
        x = pred[x][0]  # type: ignore[index]
    cyc: list[tuple[int, int, bool]] = []
    y = x
    while True:
        p, red = pred[y]  # type: ignore[misc]
        cyc.append((p, y, red))
        y = p
        if y == x:
            break
    cyc.reverse()
    cyc = _shortcut_reds(z2, cyc)
    out = []
    for i, j, red in cyc:
        w = z2.m[i][j] if red else gv.m[i][j]
        out.append(ColoredEdge(v.clocks[i], v.clocks[j], EdgeColor.ZONE if red else EdgeColor.LU, w))
    wit = SimWitness(v, tuple(out))
    if not wit.total() < LE_ZERO:
        raise WitnessError(f"extracted cycle is not negative: {wit.describe()}")
    return wit


# --- brute-force oracle -----------------------------------------------------

_RED, _STRICT_BAND, _BAND = 0, 1, 2


def _simple_cycles(n: int):
    """Simple directed cycles of the complete graph on ``range(n)``, each
    starting at its least vertex, in lexicographic order."""
    for s in range(n):
        path = [s]
        used = {s}

        def extend():
            for nxt in range(s, n):
                if nxt == s:
                    if len(path) >= 2:
                        yield list(path)
                    continue
                if nxt in used:
                    continue
                path.append(nxt)
                used.add(nxt)
                yield from extend()
                path.pop()
                used.discard(nxt)

        yield from extend()


def _segments(cycle: Sequence[int], kinds: Sequence[int]) -> list[tuple[int, int]] | None:
    """Maximal runs of band edges as (start, end) vertex pairs; None when every edge is a band edge."""
    k = len(cycle)
    if all(t == _BAND for t in kinds):
        return None
    # rotate so that position 0 is not a band edge
    first = next(p for p in range(k) if kinds[p] != _BAND)
    segs = []
    start = None
    for step in range(1, k + 1):
        q = (first + step) % k
        if kinds[q] == _BAND and start is None:
            start = cycle[q]
        if kinds[q] != _BAND and start is not None:
            segs.append((start, cycle[q]))
            start = None
    return segs


def _scale(w: Weight, q: int) -> Weight:
    if not w.finite:
        return w
    c = w.bound * q
    if isinstance(c, Fraction):
        if c.denominator != 1:
            raise ValueError("zone bounds must be integers")
        c = int(c)
    return Weight(c if w.closed else c - 1, True)


def not_simulated_bruteforce(z: Zone | None, z2: Zone, lu: LUBounds) -> SimWitness | None:
    """Exhaustive search for a non-simulation witness (None means simulated).

    Every simple cycle and every choice of edge kind (ZONE edge, strict LU edge
    below ``L``, LU edge inside ``[L, U]``) gives a linear problem over ``v`` in
    ``Z``.  Band edges telescope, so the cycle weight depends on ``v`` through a
    sum of differences; its minimum over a difference-constraint polyhedron is a
    transportation problem over shortest-path distances.  Strict inequalities
    are handled by scaling all constants by ``q = n*n + 1`` and tightening each
    strict bound by one, which keeps every rational vertex count below ``q``.
    Exponential; meant for a handful of clocks.
    """
    if z is None:
        return None
    if z2 is None:
        raise ValueError("Z' must be non-empty")
    if z.clocks != z2.clocks or tuple(lu.clocks) != z.clocks:
        raise ValueError("clock mismatch between zones and bounds")
    if is_subset(z, z2):
        return None
    n = z.dim
    q = n * n + 1
    clocks = z.clocks

    # edge options: (kind, weight lower bound, constraints added on v)
    options: list[list[list[tuple[int, Weight]]]] = [[[] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            opts = options[i][j]
            red = z2.m[i][j]
            if red.finite:
                opts.append((_RED, red))
            lo = lu.lower(clocks[j], clocks[i])
            up = lu.upper(clocks[j], clocks[i])
            if isinstance(lo, Infinity):
                continue
            if not Weight(lo, False) + z.m[j][i] < LE_ZERO:
                opts.append((_STRICT_BAND, Weight(lo, False)))
            if (
                not isinstance(up, Infinity)
                and not Weight(up, True) + z.m[j][i] < LE_ZERO
                and not Weight(-lo, True) + z.m[i][j] < LE_ZERO
            ):
                low = lo
                zl = z.m[j][i]
                if zl.finite and -zl.bound > low:
                    low = -zl.bound
                opts.append((_BAND, Weight(low, True)))

    base = [[_scale(w, q) for w in row] for row in z.m]
    cache: dict[tuple, Zone | None] = {}

    for cycle in _simple_cycles(n):
        k = len(cycle)
        arcs = [(cycle[p], cycle[(p + 1) % k]) for p in range(k)]
        choice_lists = [options[i][j] for i, j in arcs]
        if any(not c for c in choice_lists):
            continue
        for combo in itertools.product(*choice_lists):
            kinds = [c[0] for c in combo]
            if k > 1 and any(kinds[p] == _RED and kinds[(p + 1) % k] == _RED for p in range(k)):
                continue
            lower = LE_ZERO
            for _, w in combo:
                lower = lower + w
            if not lower < LE_ZERO:
                continue
            wit = _solve_case(z, z2, lu, q, base, cache, cycle, arcs, kinds)
            if wit is not None:
                return wit
    return None


def _solve_case(z, z2, lu, q, base, cache, cycle, arcs, kinds) -> SimWitness | None:
    clocks = z.clocks
    const = LE_ZERO
    extra: list[tuple[int, int, int]] = []  # (src, dst, scaled bound) meaning v[dst] - v[src] <= bound
    for (i, j), kind in zip(arcs, kinds):
        if kind == _RED:
            const = const + z2.m[i][j]
            continue
        lo = lu.lower(clocks[j], clocks[i])
        if kind == _STRICT_BAND:
            const = const + Weight(lo, False)
            extra.append((i, j, q * lo - 1))
        else:
            up = lu.upper(clocks[j], clocks[i])
            extra.append((i, j, q * up))
            extra.append((j, i, -q * lo))
    key = tuple(sorted(extra))
    if key not in cache:
        m = [list(r) for r in base]
        for i, j, b in extra:
            if Weight(b, True) < m[i][j]:
                m[i][j] = Weight(b, True)
        cache[key] = canonicalize(DistanceGraph(clocks, m))
    zs = cache[key]
    if zs is None:
        return None
    K = const.bound
    # need F_s <= thr, where F is the band-edge sum
    thr = -q * K - (1 if const.closed else 0)
    segs = _segments(cycle, kinds)
    if segs is None:
        return None  # all band edges: total is exactly (<=, 0)
    starts = [b for b, _ in segs]
    ends = [a for _, a in segs]
    cost, perm = _transport(zs, ends, starts)
    # the largest value of sum v(b) - v(a) is the cheapest transport cost, and F is its negation
    if cost.finite and -cost.bound > thr:
        return None
    if not cost.finite:
        # unbounded: cap every clock by B and grow B until the capped optimum is low enough
        B = q * (abs(thr) + 1)
        while True:
            capped = canonicalize(zs.with_constraints((c, "0", Weight(B, True)) for c in clocks[1:]))
            if capped is not None:
                cost, perm = _transport(capped, ends, starts)
                if cost.finite and -cost.bound <= thr:
                    zs = capped
                    break
            B *= 2
            if B > q * 2**64 * (abs(thr) + 1):
                raise WitnessError("unbounded case did not converge")
    # complementary slackness: an optimal v makes every matched pair tight at once
    tight = zs.with_constraints(
        (clocks[a], clocks[starts[pb]], Weight(-zs.m[a][starts[pb]].bound, True))
        for a, pb in zip(ends, perm)
    )
    pt = canonicalize(tight)
    if pt is not None:
        vals = [Fraction(-pt.m[x][0].bound, q) if x else Fraction(0) for x in range(len(clocks))]
        wit = _witness_on_cycle(z, z2, lu, Valuation(clocks, vals), arcs, kinds)
        if wit is not None:
            return wit
    raise WitnessError(f"case on cycle {cycle} with kinds {kinds} is feasible but no witness was built")


def _transport(zs: DistanceGraph, ends: list[int], starts: list[int]) -> tuple[Weight, tuple[int, ...]]:
    """Cheapest matching of run ends to run starts under the distances of ``zs``."""
    best: tuple[int, ...] = ()
    best_cost: Weight | None = None
    for perm in itertools.permutations(range(len(starts))):
        cost = LE_ZERO
        for a, pb in zip(ends, perm):
            cost = cost + zs.m[a][starts[pb]]
        if best_cost is None or cost < best_cost:
            best_cost, best = cost, perm
    assert best_cost is not None
    return best_cost, best


def _witness_on_cycle(z, z2, lu, v: Valuation, arcs, kinds) -> SimWitness | None:
    gv = gvlu_graph(v, lu)
    clocks = v.clocks
    edges = []
    for (i, j), kind in zip(arcs, kinds):
        if kind == _RED:
            edges.append(ColoredEdge(clocks[i], clocks[j], EdgeColor.ZONE, z2.m[i][j]))
        else:
            edges.append(ColoredEdge(clocks[i], clocks[j], EdgeColor.LU, gv.m[i][j]))
    wit = SimWitness(v, tuple(edges))
    if not z.contains(v) or not all(e.weight.finite for e in edges) or not wit.total() < LE_ZERO:
        return None
    verify_witness(z, z2, lu, wit)
    return wit


# --- zone-level entry points ------------------------------------------------


def _probe(z: Zone, z2: Zone, lu: LUBounds) -> SimWitness | None:
    """Cheap search: test a few points of ``z`` (its least point and the
    vertices maximising single clocks when bounded)."""
    points = [sample_valuation(z)]
    for x in range(1, z.dim):
        if z.m[0][x].finite and z.m[0][x].closed:
            pinned = canonicalize(DistanceGraph(z.clocks, [
                [w if not (i == x and j == 0) else Weight(-z.m[0][x].bound, True) for j, w in enumerate(row)]
                for i, row in enumerate(z.m)
            ]))
            if pinned is not None:
                points.append(sample_valuation(pinned))
    for v in points:
        wit = witness_for_valuation(v, z2, lu)
        if wit is not None:
            verify_witness(z, z2, lu, wit)
            return wit
    return None


def _band_uniform(z: Zone, lu: LUBounds) -> bool:
    """Does every clock difference stay on one side of its bounds (below L,
    between L and U, above U) throughout ``z``?"""
    n = z.dim
    for y in range(n):
        for x in range(n):
            if x == y:
                continue
            lo = lu.lower(z.clocks[x], z.clocks[y])
            up = lu.upper(z.clocks[x], z.clocks[y])
            a, b = -z.m[x][y].bound, z.m[y][x].bound  # range of v(x) - v(y)
            if not (b < lo or (lo <= a and b <= up) or a > up):
                return False
    return True


def integral_points(z: Zone):
    """Integer points of a bounded canonical zone, clock by clock.

    Canonicity means every partial point that respects the pairwise bounds
    extends, so the search never backtracks out of a dead end.
    """
    n = z.dim
    vals: list[int] = [0] * n

    def walk(x: int):
        if x == n:
            yield Valuation(z.clocks, list(vals))
            return
        lo, hi = None, None
        for y in range(x):
            up, dn = z.m[y][x], z.m[x][y]
            if up.finite:
                b = vals[y] + up.bound
                b = math.floor(b) if up.closed else math.ceil(b) - 1
                hi = b if hi is None else min(hi, b)
            if dn.finite:
                b = vals[y] - dn.bound
                b = math.ceil(b) if dn.closed else math.floor(b) + 1
                lo = b if lo is None else max(lo, b)
        if lo is None or hi is None:
            raise ValueError("zone is unbounded")
        for c in range(lo, hi + 1):
            vals[x] = c
            yield from walk(x + 1)

    yield from walk(1)


def vertex_check(z: Zone, z2: Zone, lu: LUBounds, limit: int = 4096) -> tuple[bool, SimWitness | None]:
    """Exact answer for closed, bounded, integer zones on which every
    difference keeps its band; ``(False, None)`` when it does not apply.

    Under those conditions the valuations simulated by ``z2`` form a convex
    set (a projection of linear constraints over ``v`` and ``v'``), so ``z`` is
    simulated iff its vertices are.  Vertices of such zones are integral, so
    testing every integer point suffices.
    """
    if not is_closed(z) or not all(w.finite for w in z.m[0]):
        return False, None
    if any(w.finite and Fraction(w.bound).denominator != 1 for row in z.m for w in row):
        return False, None
    if not _band_uniform(z, lu):
        return False, None
    # cheap count first: bail out before testing anything if there are too many points
    for k, _ in enumerate(integral_points(z)):
        if k >= limit:
            return False, None
    for v in integral_points(z):
        wit = witness_for_valuation(v, z2, lu)
        if wit is not None:
            verify_witness(z, z2, lu, wit)
            return True, wit
    return True, None


def check_simulation(
    z: Zone | None,
    z2: Zone | None,
    lu: LUBounds,
    backend: str = "oracle",
    solver=None,
    shortcuts: bool = True,
) -> SimWitness | None:
    """None when ``z`` is simulated by ``z2``, otherwise a verified witness.

    With ``shortcuts`` the exact cheap cases (inclusion, :func:`vertex_check`)
    are tried first.  ``backend="oracle"`` then probes a few points before the
    exhaustive search; ``backend="smt"`` hands the question to an external solver.
    """
    if z is None:
        return None
    if z2 is None:
        raise ValueError("Z' must be non-empty")
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if shortcuts:
        if is_subset(z, z2):
            return None
        decided, wit = vertex_check(z, z2, lu)
        if decided:
            return wit
    if backend == "oracle":
        wit = _probe(z, z2, lu)
        if wit is not None:
            return wit
        return not_simulated_bruteforce(z, z2, lu)
    from .smt import smt_not_simulated

    return smt_not_simulated(z, z2, lu, solver)


def is_simulated(
    z: Zone | None, z2: Zone | None, lu: LUBounds, backend: str = "oracle", solver=None, shortcuts: bool = True
) -> bool:
    return check_simulation(z, z2, lu, backend, solver, shortcuts) is None
