"""Distance graphs (DBMs) over clocks with exact weights.

Matrix orientation, used everywhere in this package:

    ``m[y][x]`` is the weight of the edge ``y -> x``, i.e. the constraint
    ``x - y ◁ c``.

Index 0 is the zero clock (named ``"0"``).  So ``m[0][x]`` is the upper bound
of ``x`` (``x - 0 ◁ c``) and ``m[x][0]`` its negated lower bound
(``0 - x ◁ c``).  Many DBM libraries use the transposed convention; do not mix.

Bounds are ``int`` or ``Fraction`` when finite and :data:`INF` otherwise.
Valuations range over the non-negative rationals, so every graph is read with
the implicit constraints ``x >= 0``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

ZERO = "0"


class Infinity:
    """Signed infinity that compares and adds exactly against ints and Fractions."""

    __slots__ = ("sign",)

    def __init__(self, sign: int) -> None:
        self.sign = 1 if sign > 0 else -1

    def __repr__(self) -> str:
        return "INF" if self.sign > 0 else "-INF"

    def __str__(self) -> str:
        return "inf" if self.sign > 0 else "-inf"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Infinity) and other.sign == self.sign

    def __hash__(self) -> int:
        return hash(("Infinity", self.sign))

    def __lt__(self, other: object) -> bool:
        if isinstance(other, Infinity):
            return self.sign < other.sign
        return self.sign < 0

    def __le__(self, other: object) -> bool:
        return self == other or self < other

    def __gt__(self, other: object) -> bool:
        if isinstance(other, Infinity):
            return self.sign > other.sign
        return self.sign > 0

    def __ge__(self, other: object) -> bool:
        return self == other or self > other

    def __add__(self, other: object) -> Infinity:
        if isinstance(other, Infinity) and other.sign != self.sign:
            raise ArithmeticError("inf + -inf is undefined")
        return self

    __radd__ = __add__

    def __neg__(self) -> Infinity:
        return NEG_INF if self.sign > 0 else INF

    def __sub__(self, other: object) -> Infinity:
        if isinstance(other, Infinity):
            return self + (-other)
        return self

    def __rsub__(self, other: object) -> Infinity:
        return -self

    def __mul__(self, k: object) -> Infinity:
        if isinstance(k, Infinity):
            return INF if k.sign == self.sign else NEG_INF
        if k > 0:
            return self
        if k < 0:
            return -self
        raise ArithmeticError("0 * inf is undefined")

    __rmul__ = __mul__


INF = Infinity(1)
NEG_INF = Infinity(-1)

Number = Union[int, Fraction]
Bound = Union[int, Fraction, Infinity]


class Weight(NamedTuple):
    """An edge weight ``(◁, c)``.

    Stored as ``(bound, closed)`` with ``closed`` true for ``<=``.  Tuple
    order then coincides with the weight order: ``(<, c) < (<=, c) < (<, c')``
    for ``c < c'``, and ``(<, inf)`` is the maximum.
    """

    bound: Bound
    closed: bool

    @property
    def strict(self) -> bool:
        return not self.closed

    @property
    def finite(self) -> bool:
        return not isinstance(self.bound, Infinity)

    def __add__(self, other: Weight) -> Weight:  # type: ignore[override]
        return Weight(self.bound + other.bound, self.closed and other.closed)

    def __str__(self) -> str:
        return f"({'<=' if self.closed else '<'}, {self.bound})"

    @staticmethod
    def le(c: Number) -> Weight:
        return Weight(c, True)

    @staticmethod
    def lt(c: Bound) -> Weight:
        return Weight(c, False)


UNBOUNDED = Weight(INF, False)
LE_ZERO = Weight(0, True)
LT_ZERO = Weight(0, False)


def weight_add(a: Weight, b: Weight) -> Weight:
    return a + b


def weight_lt(a: Weight, b: Weight) -> bool:
    return a < b


def satisfies(diff: Number, w: Weight) -> bool:
    """Does the value ``diff`` satisfy ``diff ◁ c``?"""
    if not w.finite:
        return True
    return diff <= w.bound if w.closed else diff < w.bound


def _exact(x) -> Number:
    f = Fraction(x)
    return f.numerator if f.denominator == 1 else f


class Valuation:
    """Non-negative rational clock values; index 0 is the zero clock.

    Integral values are stored as ``int``, which keeps the hot paths off
    ``Fraction`` arithmetic.
    """

    __slots__ = ("clocks", "values")

    def __init__(self, clocks: Sequence[str], values: Sequence[Number]) -> None:
        clocks = tuple(clocks)
        values = tuple(_exact(x) for x in values)
        if not clocks or clocks[0] != ZERO:
            raise ValueError("clock list must start with the zero clock")
        if len(values) != len(clocks):
            raise ValueError("one value per clock expected")
        if values[0] != 0:
            raise ValueError("the zero clock must have value 0")
        if any(x < 0 for x in values):
            raise ValueError(f"negative clock value in {values}")
        self.clocks = clocks
        self.values = values

    @classmethod
    def of(cls, clocks: Sequence[str], mapping: Mapping[str, Number]) -> Valuation:
        """Build from a name->value map; ``clocks`` may omit the zero clock."""
        clocks = tuple(clocks)
        if not clocks or clocks[0] != ZERO:
            clocks = (ZERO,) + clocks
        unknown = set(mapping) - set(clocks)
        if unknown:
            raise KeyError(f"unknown clocks {sorted(unknown)}")
        return cls(clocks, [0] + [mapping.get(c, 0) for c in clocks[1:]])

    @classmethod
    def zero(cls, clocks: Sequence[str]) -> Valuation:
        return cls.of(clocks, {})

    def __getitem__(self, key: str | int) -> Number:
        if isinstance(key, int):
            return self.values[key]
        return self.values[self.clocks.index(key)]

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Valuation)
            and other.clocks == self.clocks
            and other.values == self.values
        )

    def __hash__(self) -> int:
        return hash((self.clocks, self.values))

    def __repr__(self) -> str:
        inner = ", ".join(f"{c}={_fmt(v)}" for c, v in zip(self.clocks[1:], self.values[1:]))
        return f"Valuation({inner})"

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(self.clocks[1:], self.values[1:]))

    def delay(self, d: Number) -> Valuation:
        d = Fraction(d)
        if d < 0:
            raise ValueError("negative delay")
        return Valuation(self.clocks, [0] + [x + d for x in self.values[1:]])

    def reset(self, names: Iterable[str]) -> Valuation:
        idx = {self.clocks.index(n) for n in names}
        return Valuation(self.clocks, [0 if i in idx else x for i, x in enumerate(self.values)])

    def floor(self) -> Valuation:
        return Valuation(self.clocks, [math.floor(x) for x in self.values])

    def is_integral(self) -> bool:
        return all(x.denominator == 1 for x in self.values)

    def satisfies(self, x: str, y: str, w: Weight) -> bool:
        """Check ``x - y ◁ c`` for this valuation."""
        return satisfies(self[x] - self[y], w)


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class DistanceGraph:
    """Weighted complete graph over ``clocks`` (``clocks[0]`` is the zero clock).

    Instances are treated as immutable; the matrix is a tuple of tuples.
    """

    __slots__ = ("clocks", "m", "_index")

    def __init__(self, clocks: Sequence[str], m: Sequence[Sequence[Weight]]) -> None:
        clocks = tuple(clocks)
        if not clocks or clocks[0] != ZERO:
            raise ValueError("clock list must start with the zero clock")
        if len(set(clocks)) != len(clocks):
            raise ValueError("duplicate clock names")
        n = len(clocks)
        rows = tuple(tuple(r) for r in m)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"expected a {n}x{n} matrix")
        self.clocks = clocks
        self.m = rows
        self._index = {c: i for i, c in enumerate(clocks)}

    @classmethod
    def unconstrained(cls, clocks: Sequence[str]) -> DistanceGraph:
        """The graph of all non-negative valuations."""
        clocks = _with_zero(clocks)
        n = len(clocks)
        m = [[UNBOUNDED] * n for _ in range(n)]
        for i in range(n):
            m[i][i] = LE_ZERO
            m[i][0] = LE_ZERO
        return cls(clocks, m)

    @classmethod
    def from_constraints(
        cls, clocks: Sequence[str], constraints: Iterable[tuple[str, str, Weight]]
    ) -> DistanceGraph:
        """Graph of ``x - y ◁ c`` triples ``(x, y, weight)`` plus ``x >= 0``."""
        return cls.unconstrained(clocks).with_constraints(constraints)

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def dim(self) -> int:
        return len(self.clocks)

    def bound(self, x: str, y: str) -> Weight:
        """Weight on ``x - y`` (the edge ``y -> x``)."""
        return self.m[self._index[y]][self._index[x]]

    def with_constraints(self, constraints: Iterable[tuple[str, str, Weight]]) -> DistanceGraph:
        m = [list(r) for r in self.m]
        for x, y, w in constraints:
            i, j = self._index[y], self._index[x]
            if i == j:
                raise ValueError(f"constraint on {x} - {x}")
            if w < m[i][j]:
                m[i][j] = w
        return DistanceGraph(self.clocks, m)

    def edges(self) -> Iterator[tuple[int, int, Weight]]:
        """Finite off-diagonal edges as ``(source, target, weight)``."""
        for i, row in enumerate(self.m):
            for j, w in enumerate(row):
                if i != j and w.finite:
                    yield i, j, w

    def contains(self, v: Valuation) -> bool:
        if v.clocks != self.clocks:
            raise ValueError("valuation clocks differ from graph clocks")
        vals = v.values
        for i, row in enumerate(self.m):
            vi = vals[i]
            for j, w in enumerate(row):
                if i != j and not satisfies(vals[j] - vi, w):
                    return False
        return True

    def __contains__(self, v: Valuation) -> bool:
        return self.contains(v)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DistanceGraph)
            and other.clocks == self.clocks
            and other.m == self.m
        )

    def __hash__(self) -> int:
        return hash((self.clocks, self.m))

    def __repr__(self) -> str:
        kind = type(self).__name__
        body = "; ".join(format_edges(self))
        return f"{kind}({body or 'true'})"


class Zone(DistanceGraph):
    """A canonical, non-empty distance graph.  Only built by the operations below."""

    __slots__ = ()


def _with_zero(clocks: Sequence[str]) -> tuple[str, ...]:
    clocks = tuple(clocks)
    if clocks and clocks[0] == ZERO:
        return clocks
    if ZERO in clocks:
        raise ValueError("the zero clock must come first")
    return (ZERO,) + clocks


def format_edges(g: DistanceGraph) -> list[str]:
    """Debug dump lines, one per finite edge: ``x - y <= c`` / ``x - y < c``."""
    out = []
    for i, j, w in g.edges():
        op = "<=" if w.closed else "<"
        out.append(f"{g.clocks[j]} - {g.clocks[i]} {op} {w.bound}")
    return out


def dump_zone(g: DistanceGraph) -> str:
    lines = ["clocks " + " ".join(g.clocks[1:])]
    lines.extend(format_edges(g))
    return "\n".join(lines) + "\n"


# --- in-place kernels on list-of-lists matrices -----------------------------


def _floyd_warshall(m: list[list[Weight]]) -> bool:
    """Close ``m`` under shortest paths; False when a negative cycle exists."""
    n = len(m)
    for k in range(n):
        rowk = m[k]
        for i in range(n):
            mik = m[i][k]
            if not mik.finite:
                continue
            rowi = m[i]
            cik, oik = mik
            for j in range(n):
                bkj, okj = rowk[j]
                if isinstance(bkj, Infinity):
                    continue
                cand = Weight(cik + bkj, oik and okj)
                if cand < rowi[j]:
                    rowi[j] = cand
        if m[k][k] < LE_ZERO:
            return False
    return all(not (m[i][i] < LE_ZERO) for i in range(n))


def _tighten(m: list[list[Weight]], y: int, x: int, w: Weight) -> bool:
    """Add ``x - y ◁ c`` to the canonical ``m`` in O(n^2); False if it empties it."""
    if w + m[x][y] < LE_ZERO:
        return False
    if not w < m[y][x]:
        return True
    n = len(m)
    col_y = [m[i][y] for i in range(n)]
    row_x = m[x][:]
    for i in range(n):
        a = col_y[i]
        if not a.finite:
            continue
        aw = a + w
        rowi = m[i]
        for j in range(n):
            b = row_x[j]
            if not b.finite:
                continue
            cand = aw + b
            if cand < rowi[j]:
                rowi[j] = cand
    return True


def _nonneg(m: list[list[Weight]]) -> None:
    for i in range(1, len(m)):
        if LE_ZERO < m[i][0]:
            m[i][0] = LE_ZERO
        if m[i][i] != LE_ZERO and LE_ZERO < m[i][i]:
            m[i][i] = LE_ZERO
    if LE_ZERO < m[0][0]:
        m[0][0] = LE_ZERO


# --- zone operations ----------------------------------------------------------


def canonicalize(g: DistanceGraph) -> Zone | None:
    """Shortest-path closure of ``g``; ``None`` stands for the empty zone."""
    m = [list(r) for r in g.m]
    _nonneg(m)
    if not _floyd_warshall(m):
        return None
    return Zone(g.clocks, m)


def min_graph(g1: DistanceGraph, g2: DistanceGraph) -> DistanceGraph:
    if g1.clocks != g2.clocks:
        raise ValueError(f"clock sets differ: {g1.clocks} vs {g2.clocks}")
    m = [[a if a < b else b for a, b in zip(r1, r2)] for r1, r2 in zip(g1.m, g2.m)]
    return DistanceGraph(g1.clocks, m)


def zero_zone(clocks: Sequence[str]) -> Zone:
    """The point zone ``{0}``."""
    clocks = _with_zero(clocks)
    n = len(clocks)
    return Zone(clocks, [[LE_ZERO] * n for _ in range(n)])


def elapse(z: Zone) -> Zone:
    """Delay closure ``{v + d | v in z, d >= 0}``."""
    m = [list(r) for r in z.m]
    for x in range(1, len(m)):
        m[0][x] = UNBOUNDED
    return Zone(z.clocks, m)


def intersect_guard(z: Zone, guard: Iterable[tuple[str, str, Weight]]) -> Zone | None:
    """Intersect with ``x - y ◁ c`` atoms, given as ``(x, y, weight)``."""
    m = [list(r) for r in z.m]
    for x, y, w in guard:
        if not _tighten(m, z.index(y), z.index(x), w):
            return None
    return Zone(z.clocks, m)


def reset(z: Zone, names: Iterable[str]) -> Zone:
    m = [list(r) for r in z.m]
    n = len(m)
    for name in names:
        x = z.index(name)
        if x == 0:
            raise ValueError("cannot reset the zero clock")
        for y in range(n):
            if y != x:
                m[y][x] = m[y][0]
                m[x][y] = m[0][y]
        m[x][x] = LE_ZERO
    return Zone(z.clocks, m)


def is_subset(z1: Zone | None, z2: Zone | None) -> bool:
    if z1 is None:
        return True
    if z2 is None:
        return False
    if z1.clocks != z2.clocks:
        raise ValueError(f"clock sets differ: {z1.clocks} vs {z2.clocks}")
    for r1, r2 in zip(z1.m, z2.m):
        for a, b in zip(r1, r2):
            if b < a:
                return False
    return True


def is_closed(z: DistanceGraph) -> bool:
    """Topologically closed: every finite edge is non-strict."""
    return all(w.closed for _, _, w in z.edges())


def sample_valuation(z: Zone) -> Valuation:
    """A point of ``z``: the pointwise-least valuation of a slightly shrunk copy.

    Strict edges are shrunk by ``1/q``; with ``q`` the bound denominators times
    the vertex count no nonempty zone becomes empty, and the least point of a
    closed canonical graph is ``v(x) = -m[x][0]``.
    """
    if z is None:
        raise ValueError("cannot sample the empty zone")
    n = len(z.clocks)
    den = 1
    for _, _, w in z.edges():
        if isinstance(w.bound, Fraction):
            den = math.lcm(den, w.bound.denominator)
    q = den * n
    m = []
    for i, row in enumerate(z.m):
        new = []
        for j, w in enumerate(row):
            if not w.finite or i == j:
                new.append(w if i != j else LE_ZERO)
            else:
                c = w.bound * q
                new.append(Weight(int(c) - (0 if w.closed else 1), True))
        m.append(new)
    _nonneg(m)
    if not _floyd_warshall(m):
        raise ArithmeticError("shrunk zone became empty; precision argument violated")
    v = Valuation(z.clocks, [Fraction(-m[x][0].bound, q) if x else 0 for x in range(n)])
    if not z.contains(v):
        raise ArithmeticError(f"sampled point {v} is not in the zone")
    return v


def integral_witness(z: Zone) -> Valuation:
    """An integer point of a non-empty, topologically closed zone (floor of any point)."""
    if z is None:
        raise ValueError("empty zone has no witness")
    if not is_closed(z):
        raise ValueError("integral_witness needs a topologically closed zone")
    if any(isinstance(w.bound, Fraction) and w.bound.denominator != 1 for _, _, w in z.edges()):
        raise ValueError("integral_witness needs integer bounds")
    v = sample_valuation(z).floor()
    if not z.contains(v):
        raise ArithmeticError(f"floor point {v} escaped the zone")
    return v
