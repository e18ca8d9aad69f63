"""Text files for zones and LU bounds.

Zone files use the debug dump format: a ``clocks x y`` header followed by one
``x - y <= c`` or ``x - y < c`` line per edge (``0`` names the zero clock).
LU files have the same header and lines ``x - y : L U`` with ``inf`` and
``-inf`` allowed.  Blank lines and ``#`` comments are ignored in both.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .dbm import INF, NEG_INF, ZERO, Bound, DistanceGraph, Weight, Zone, canonicalize, dump_zone
from .model import LUBounds, ParseError

_EDGE = re.compile(r"^(\S+)\s*-\s*(\S+)\s*(<=|<)\s*(\S+)$")
_LU = re.compile(r"^(\S+)\s*-\s*(\S+)\s*:\s*(\S+)\s+(\S+)$")


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _header(text: str) -> tuple[tuple[str, ...], list[tuple[int, str]]]:
    lines = list(_lines(text))
    if not lines or not lines[0][1].startswith("clocks"):
        raise ParseError("expected a 'clocks' header", lines[0][0] if lines else 1, 1)
    names = lines[0][1].split()[1:]
    if ZERO in names or len(set(names)) != len(names):
        raise ParseError("clock names must be distinct and differ from 0", lines[0][0], 1)
    return (ZERO,) + tuple(names), lines[1:]


def _number(tok: str, no: int) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad number {tok!r}", no, 1) from None


def _clock(name: str, clocks: tuple[str, ...], no: int) -> str:
    if name not in clocks:
        raise ParseError(f"undeclared clock {name!r}", no, 1)
    return name


def parse_zone_graph(text: str) -> DistanceGraph:
    clocks, lines = _header(text)
    cons = []
    for no, line in lines:
        m = _EDGE.match(line)
        if not m:
            raise ParseError(f"expected 'x - y <= c', got {line!r}", no, 1)
        x, y = _clock(m[1], clocks, no), _clock(m[2], clocks, no)
        c = _number(m[4], no)
        cons.append((x, y, Weight(c.numerator if c.denominator == 1 else c, m[3] == "<=")))
    return DistanceGraph.from_constraints(clocks, cons)


def parse_zone(text: str) -> Zone | None:
    """Canonical zone of the file; None when its constraints are unsatisfiable."""
    return canonicalize(parse_zone_graph(text))


def write_zone(z: DistanceGraph) -> str:
    return dump_zone(z)


def _bound(tok: str, no: int) -> Bound:
    if tok == "inf":
        return INF
    if tok == "-inf":
        return NEG_INF
    c = _number(tok, no)
    return c.numerator if c.denominator == 1 else c


def parse_lu(text: str) -> LUBounds:
    clocks, lines = _header(text)
    L: dict[tuple[str, str], Bound] = {}
    U: dict[tuple[str, str], Bound] = {}
    for no, line in lines:
        m = _LU.match(line)
        if not m:
            raise ParseError(f"expected 'x - y : L U', got {line!r}", no, 1)
        x, y = _clock(m[1], clocks, no), _clock(m[2], clocks, no)
        if x == y:
            raise ParseError("bounds need two distinct clocks", no, 1)
        L[(x, y)], U[(x, y)] = _bound(m[3], no), _bound(m[4], no)
    lu = LUBounds(clocks, L, U)
    bad = lu.violations(reset_closed=False)
    if bad:
        raise ParseError("; ".join(bad), lines[0][0] if lines else 1, 1)
    return lu


def write_lu(lu: LUBounds) -> str:
    out = ["clocks " + " ".join(lu.clocks[1:])]
    for x, y in lu.pairs():
        lo, up = lu.lower(x, y), lu.upper(x, y)
        if lo == INF and up == NEG_INF:
            continue
        out.append(f"{x} - {y} : {lo} {up}")
    return "\n".join(out) + "\n"
