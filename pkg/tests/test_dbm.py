from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagta.dbm import (
    INF,
    LE_ZERO,
    UNBOUNDED,
    ZERO,
    DistanceGraph,
    Valuation,
    Weight,
    canonicalize,
    dump_zone,
    elapse,
    integral_witness,
    intersect_guard,
    is_closed,
    is_subset,
    min_graph,
    reset,
    sample_valuation,
    weight_add,
    weight_lt,
    zero_zone,
)
from diagta.generators import clock_names, random_free_valuation, random_graph, random_valuation, random_zone

XY = (ZERO, "x", "y")


def le(c):
    return Weight(c, True)


def lt(c):
    return Weight(c, False)


def graph(cons, clocks=XY):
    return DistanceGraph.from_constraints(clocks, cons)


def point(**vals):
    return Valuation.of(tuple(vals), vals)


# --- weights -------------------------------------------------------------------


def test_weight_add_examples():
    assert weight_add(le(2), le(3)) == le(5)
    assert weight_add(lt(1), le(0)) == lt(1)
    assert weight_add(le(4), UNBOUNDED) == UNBOUNDED


def test_weight_order_examples():
    assert weight_lt(lt(3), le(3))
    assert weight_lt(le(2), lt(3))
    assert weight_lt(le(5), UNBOUNDED)
    assert not weight_lt(UNBOUNDED, le(5))


weights = st.one_of(
    st.just(UNBOUNDED),
    st.builds(Weight, st.integers(-8, 8), st.booleans()),
)


@given(weights, weights, weights)
def test_weight_add_laws(a, b, c):
    assert weight_add(a, b) == weight_add(b, a)
    assert weight_add(weight_add(a, b), c) == weight_add(a, weight_add(b, c))
    # addition is monotone for the order
    if weight_lt(a, b):
        assert not weight_lt(weight_add(b, c), weight_add(a, c))


def test_infinity_only_strict():
    assert UNBOUNDED.strict and not UNBOUNDED.finite
    assert -INF < -10 < INF


# --- canonical form -------------------------------------------------------------


def _has_negative_cycle(g: DistanceGraph) -> bool:
    """Enumerate every simple cycle, including the implicit ``x >= 0`` edges."""
    n = g.dim
    m = [list(r) for r in g.m]
    for x in range(1, n):
        if LE_ZERO < m[x][0]:
            m[x][0] = LE_ZERO
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


def test_canonicalize_examples():
    assert canonicalize(graph([("x", "y", le(1)), ("y", "x", le(-2))])) is None
    free = DistanceGraph.unconstrained(XY)
    assert canonicalize(free) == free
    z0 = canonicalize(graph([("x", "y", le(0)), ("y", "x", le(0)), (ZERO, "x", le(0)), (ZERO, "y", le(0))]))
    assert z0 is not None and z0.contains(Valuation.zero(XY))


def test_unconstrained_column_zero():
    free = DistanceGraph.unconstrained(XY)
    for x in (1, 2):
        assert free.m[x][0] == le(0)
        assert free.m[0][x] == UNBOUNDED


def test_canonicalize_matches_cycle_enumeration():
    rng = random.Random(11)
    for _ in range(300):
        clocks = clock_names(rng.randint(1, 3))
        g = random_graph(rng, clocks, -4, 4, density=0.6)
        z = canonicalize(g)
        assert (z is None) == _has_negative_cycle(g)


def test_canonicalize_preserves_solutions_and_is_idempotent():
    rng = random.Random(12)
    for _ in range(200):
        clocks = clock_names(rng.randint(1, 3))
        g = random_graph(rng, clocks, -4, 4)
        z = canonicalize(g)
        if z is None:
            continue
        assert canonicalize(z) == z
        for _ in range(30):
            v = random_free_valuation(rng, clocks, 5)
            assert g.contains(v) == z.contains(v)


def test_canonical_entries_are_tight():
    rng = random.Random(13)
    for _ in range(100):
        z = random_zone(rng, clock_names(3))
        n = z.dim
        for i, j, k in itertools.product(range(n), repeat=3):
            assert not (z.m[i][k] + z.m[k][j] < z.m[i][j])


# --- operations -------------------------------------------------------------------


def test_min_graph_examples():
    g = graph([("x", "y", le(3))])
    assert min_graph(g, g) == g
    assert min_graph(g, DistanceGraph.unconstrained(XY)) == g
    assert min_graph(g, graph([("x", "y", lt(3))])).bound("x", "y") == lt(3)
    with pytest.raises(ValueError):
        min_graph(g, DistanceGraph.unconstrained((ZERO, "x")))


def test_min_graph_is_intersection():
    rng = random.Random(14)
    for _ in range(100):
        clocks = clock_names(2)
        a, b = random_graph(rng, clocks), random_graph(rng, clocks)
        for _ in range(20):
            v = random_free_valuation(rng, clocks, 4)
            assert min_graph(a, b).contains(v) == (a.contains(v) and b.contains(v))


def _point_zone(**vals):
    cons = []
    for c, x in vals.items():
        cons += [(c, ZERO, le(x)), (ZERO, c, le(-x))]
    return canonicalize(graph(cons, (ZERO,) + tuple(vals)))


def test_elapse_examples():
    z0 = elapse(zero_zone(("x", "y")))
    assert elapse(z0) == z0
    e = elapse(_point_zone(x=1, y=2))
    assert e.bound("y", "x") == le(1) and e.bound("x", "y") == le(-1)
    assert e.bound(ZERO, "x") == le(-1) and not e.bound("x", ZERO).finite
    assert elapse(e) == e
    for d in (0, Fraction(1, 3), 5):
        assert e.contains(point(x=1, y=2).delay(d))


def test_intersect_guard_examples():
    z0 = elapse(zero_zone(("x", "y")))
    assert intersect_guard(z0, []) == z0
    assert intersect_guard(z0, [("x", "y", le(-1))]) is None
    g = intersect_guard(z0, [("x", ZERO, le(5))])
    assert g is not None and g.contains(Valuation.zero(XY))


def test_reset_examples():
    z = _point_zone(x=1, y=2)
    assert reset(z, []) == z
    assert reset(z, ["x", "y"]) == zero_zone(("x", "y"))
    assert reset(z, ["x"]) == _point_zone(x=0, y=2)


def test_is_subset_examples():
    z = _point_zone(x=1)
    assert is_subset(z, z)
    assert is_subset(None, z)
    wide = canonicalize(graph([("x", ZERO, le(2))], (ZERO, "x")))
    assert is_subset(z, wide) and not is_subset(wide, z)


def _exists_preimage_reset(z, u: Valuation, names) -> bool:
    # u is 0 on the reset clocks and some v in z agrees with u elsewhere
    if any(u[c] != 0 for c in names):
        return False
    fixed = [c for c in u.clocks[1:] if c not in names]
    cons = [(c, ZERO, le(u[c])) for c in fixed] + [(ZERO, c, le(-u[c])) for c in fixed]
    return intersect_guard(z, cons) is not None


def _exists_preimage_elapse(z, u: Valuation) -> bool:
    # u - d in z for some d >= 0: keep all differences of u, lower every clock
    cons = []
    for a in u.clocks:
        for b in u.clocks[1:]:
            if a != b and a != ZERO:
                cons.append((a, b, le(u[a] - u[b])))
        if a != ZERO:
            cons.append((a, ZERO, le(u[a])))
    return intersect_guard(z, cons) is not None


def _grid(clocks, top=4, step=Fraction(1, 2)):
    ticks = [step * k for k in range(int(top / step) + 1)]
    for vals in itertools.product(ticks, repeat=len(clocks) - 1):
        yield Valuation(clocks, (0,) + vals)


def test_operations_are_exact_on_a_grid():
    rng = random.Random(15)
    for _ in range(40):
        clocks = clock_names(2)
        z = random_zone(rng, clocks, cmax=3)
        names = [c for c in clocks[1:] if rng.random() < 0.5]
        r, e = reset(z, names), elapse(z)
        for _ in range(10):
            v = random_valuation(rng, z)
            assert r.contains(v.reset(names))
            assert e.contains(v.delay(Fraction(rng.randint(0, 8), 2)))
        for u in _grid(clocks):
            assert r.contains(u) == _exists_preimage_reset(z, u, names)
            assert e.contains(u) == _exists_preimage_elapse(z, u)


# --- points -------------------------------------------------------------------------


def test_sample_valuation_examples():
    z0 = elapse(zero_zone(("x", "y")))
    assert z0.contains(sample_valuation(z0))
    assert sample_valuation(_point_zone(x=1, y=5)) == point(x=1, y=5)
    with pytest.raises(ValueError):
        sample_valuation(None)


def test_sample_valuation_on_strict_zones():
    rng = random.Random(16)
    for _ in range(300):
        z = random_zone(rng, clock_names(rng.randint(1, 4)), strict_prob=0.6)
        assert z.contains(sample_valuation(z))


def test_integral_witness_examples():
    assert integral_witness(zero_zone(("x", "y"))) == Valuation.zero(XY)
    z = canonicalize(graph([("x", ZERO, le(2)), (ZERO, "x", le(-1)), ("y", "x", le(1)), ("x", "y", le(-1))]))
    assert z.contains(point(x=Fraction(3, 2), y=Fraction(5, 2)))
    w = integral_witness(z)
    assert w.is_integral() and z.contains(w)
    z3 = canonicalize(graph([("x", "y", le(3)), ("y", "x", le(-3))]))
    w3 = integral_witness(z3)
    assert w3["x"] - w3["y"] == 3
    with pytest.raises(ValueError):
        integral_witness(canonicalize(graph([("x", ZERO, lt(1))])))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_integral_witness_property(seed):
    rng = random.Random(seed)
    z = random_zone(rng, clock_names(rng.randint(1, 4)), strict_prob=0.0)
    assert is_closed(z)
    w = integral_witness(z)
    assert w.is_integral() and z.contains(w)


def test_dump_format():
    z = _point_zone(x=1)
    text = dump_zone(z)
    assert text.splitlines()[0] == "clocks x"
    assert "x - 0 <= 1" in text and "0 - x <= -1" in text
    assert "< " in dump_zone(canonicalize(graph([("x", ZERO, lt(2))], (ZERO, "x"))))


def test_valuation_rejects_bad_input():
    with pytest.raises(ValueError):
        Valuation(XY, [0, -1, 0])
    with pytest.raises(ValueError):
        Valuation(XY, [1, 0, 0])
    with pytest.raises(KeyError):
        Valuation.of(("x",), {"q": 1})
