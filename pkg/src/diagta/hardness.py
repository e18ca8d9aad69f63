"""3-CNF formulas to zone pairs: the formula is satisfiable exactly when the
first zone is not simulated by the second under uniform bounds ``M``.

Each literal gets a block of three clocks ``x < y < z`` with ``z - x = 3`` and
``y - x`` in ``{1, 2}`` encoding the variable's value; separators ``r0..rN``
delimit clauses.  The second zone widens one "border" gap per clause and, via
the border constraints, excludes valuations where a literal of the widened
clause is true.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .dbm import ZERO, DistanceGraph, Valuation, Weight, Zone, canonicalize, is_closed
from .model import LUBounds, uniform_m_bounds
from .simulation import SimWitness, check_simulation, equiv_m, witness_for_valuation


@dataclass(frozen=True)
class Literal:
    var: int  # 1-based
    positive: bool

    def __str__(self) -> str:
        return f"{'' if self.positive else '-'}{self.var}"

    def holds(self, sigma: dict[int, bool]) -> bool:
        return sigma[self.var] == self.positive


@dataclass(frozen=True)
class Cnf3:
    num_vars: int
    clauses: tuple[tuple[Literal, Literal, Literal], ...]

    def __post_init__(self) -> None:
        norm = []
        for k, clause in enumerate(self.clauses):
            if len(clause) != 3:
                raise ValueError(f"clause {k + 1} has {len(clause)} literals, expected 3")
            vs = [lit.var for lit in clause]
            if len(set(vs)) != 3:
                raise ValueError(f"clause {k + 1} repeats a variable")
            if any(not 1 <= x <= self.num_vars for x in vs):
                raise ValueError(f"clause {k + 1} uses a variable outside 1..{self.num_vars}")
            # positive literals first, otherwise keep the given order
            norm.append(tuple(sorted(clause, key=lambda lit: not lit.positive)))
        object.__setattr__(self, "clauses", tuple(norm))

    @classmethod
    def from_ints(cls, clauses: Iterable[Sequence[int]], num_vars: int | None = None) -> Cnf3:
        cl = [tuple(Literal(abs(x), x > 0) for x in c) for c in clauses]
        n = num_vars if num_vars is not None else max((lit.var for c in cl for lit in c), default=0)
        return cls(n, tuple(cl))  # type: ignore[arg-type]

    def satisfied_by(self, sigma: dict[int, bool]) -> bool:
        return all(any(lit.holds(sigma) for lit in c) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for c in self.clauses:
            lines.append(" ".join(str(lit) for lit in c) + " 0")
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Cnf3:
    header = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: bad header {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise ValueError(f"line {lineno}: clause before 'p cnf' header")
        for tok in line.split():
            try:
                x = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: not an integer: {tok!r}") from None
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                if abs(x) > header[0]:
                    raise ValueError(f"line {lineno}: variable {abs(x)} exceeds header count {header[0]}")
                cur.append(x)
    if cur:
        raise ValueError("last clause is not terminated by 0")
    if header is None:
        raise ValueError("missing 'p cnf' header")
    if len(clauses) != header[1]:
        raise ValueError(f"header announces {header[1]} clauses, found {len(clauses)}")
    for k, c in enumerate(clauses, start=1):
        if len(c) != 3:
            raise ValueError(f"clause {k} has {len(c)} literals; only 3-CNF is supported")
    return Cnf3.from_ints(clauses, header[0])


# --- the gadget -------------------------------------------------------------


def x_(i: int, j: int) -> str:
    return f"x{i}_{j}"


def y_(i: int, j: int) -> str:
    return f"y{i}_{j}"


def z_(i: int, j: int) -> str:
    return f"z{i}_{j}"


def r_(i: int) -> str:
    return f"r{i}"


@dataclass(frozen=True)
class HardnessInstance:
    phi: Cnf3
    M: int
    clocks: tuple[str, ...]  # zero clock first
    Z: Zone
    Zprime: Zone
    borders: tuple[tuple[str, str], ...]
    d: dict[tuple[int, int], int] = field(hash=False)

    @property
    def N(self) -> int:
        return len(self.phi.clauses)

    @property
    def lu(self) -> LUBounds:
        return uniform_m_bounds(self.clocks, self.M)

    def manifest(self) -> dict:
        return {
            "M": self.M,
            "clauses": self.N,
            "variables": self.phi.num_vars,
            "clocks": list(self.clocks[1:]),
            "borders": [list(b) for b in self.borders],
            "d": {f"{i},{j}": k for (i, j), k in sorted(self.d.items())},
        }


def _sequence(i: int) -> list[str]:
    """Clock order inside clause ``i``: r_{i-1}, then three blocks, then r_i."""
    out = [r_(i - 1)]
    for j in (1, 2, 3):
        out += [x_(i, j), y_(i, j), z_(i, j)]
    return out + [r_(i)]


def _eq(a: str, b: str, c: int) -> list[tuple[str, str, Weight]]:
    """``a - b = c``."""
    return [(a, b, Weight(c, True)), (b, a, Weight(-c, True))]


def _ge(a: str, b: str, c: int) -> list[tuple[str, str, Weight]]:
    """``a - b >= c``."""
    return [(b, a, Weight(-c, True))]


def _le(a: str, b: str, c: int) -> list[tuple[str, str, Weight]]:
    return [(a, b, Weight(c, True))]


def _blocks(N: int) -> list[tuple[str, str, Weight]]:
    cons = []
    for i in range(1, N + 1):
        for j in (1, 2, 3):
            cons += _ge(y_(i, j), x_(i, j), 1) + _ge(z_(i, j), y_(i, j), 1) + _eq(z_(i, j), x_(i, j), 3)
    return cons


def _border(clause: Sequence[Literal], i: int) -> tuple[str, str]:
    p = sum(1 for lit in clause if lit.positive)
    if p == 0:
        return r_(i - 1), x_(i, 1)
    if p == 3:
        return z_(i, 3), r_(i)
    return z_(i, p), x_(i, p + 1)


def _gaps(i: int) -> list[tuple[str, str]]:
    """The four inter-block gaps of clause ``i`` as (left, right) pairs."""
    return [(r_(i - 1), x_(i, 1)), (z_(i, 1), x_(i, 2)), (z_(i, 2), x_(i, 3)), (z_(i, 3), r_(i))]


def build_instance(phi: Cnf3, M: int = 4, anchored: bool = True) -> HardnessInstance:
    """``anchored=False`` leaves ``Z'`` free to slide in absolute time."""
    if M <= 3:
        raise ValueError("M must exceed 3")
    N = len(phi.clauses)
    clocks = [ZERO] + [r_(i) for i in range(N + 1)]
    for i in range(1, N + 1):
        for j in (1, 2, 3):
            clocks += [x_(i, j), y_(i, j), z_(i, j)]
    clocks_t = tuple(clocks)

    anchor = _eq(r_(0), ZERO, 0)
    # Z: blocks, fixed gaps, and equal y-offsets for repeated variables
    zc = list(anchor) + _blocks(N)
    for i in range(1, N + 1):
        zc += _eq(x_(i, 1), r_(i - 1), 2 * M - 3)
        zc += _eq(x_(i, 2), z_(i, 1), 2 * M - 3)
        zc += _eq(x_(i, 3), z_(i, 2), 2 * M - 3)
        zc += _eq(r_(i), z_(i, 3), 2 * M)
    occ: dict[int, list[tuple[int, int]]] = {}
    for i, clause in enumerate(phi.clauses, start=1):
        for j, lit in enumerate(clause, start=1):
            occ.setdefault(lit.var, []).append((i, j))
    for places in occ.values():
        for (i, j), (i2, j2) in itertools.combinations(places, 2):
            if i2 > i:
                zc += _eq(y_(i2, j2), y_(i, j), (i2 - i) * 8 * M + (j2 - j) * 2 * M)

    # Z': blocks, a widened border per clause, tight other gaps, one wide border somewhere
    borders = []
    d: dict[tuple[int, int], int] = {}
    zp = (list(anchor) if anchored else []) + _blocks(N)
    for i, clause in enumerate(phi.clauses, start=1):
        e, f = _border(clause, i)
        borders.append((e, f))
        zp += _ge(f, e, 2 * M) + _le(f, e, 2 * M + 1)
        for left, right in _gaps(i):
            if (left, right) != (e, f):
                zp += _eq(right, left, 2 * M - 3)
        p = sum(1 for lit in clause if lit.positive)
        for j, lit in enumerate(clause, start=1):
            if lit.positive:
                d[i, j] = p - j
                zp += _le(f, y_(i, j), d[i, j] * 2 * M + 2 * M + 2)
            else:
                d[i, j] = j - (p + 1)
                zp += _le(y_(i, j), e, d[i, j] * 2 * M + 2 * M + 2)
    zp += _ge(r_(N), r_(0), 8 * M * N + 1)

    Z = canonicalize(DistanceGraph.from_constraints(clocks_t, zc))
    Zp = canonicalize(DistanceGraph.from_constraints(clocks_t, zp))
    if Z is None or Zp is None:
        raise AssertionError("gadget zones must be non-empty")
    return HardnessInstance(phi, M, clocks_t, Z, Zp, tuple(borders), d)


def encode_assignment(inst: HardnessInstance, sigma: dict[int, bool]) -> Valuation:
    """The integer valuation of ``Z`` with ``r0 = 0`` whose blocks spell out ``sigma``."""
    M = inst.M
    vals: dict[str, int] = {}
    for i in range(0, inst.N + 1):
        vals[r_(i)] = 8 * M * i
    for i, clause in enumerate(inst.phi.clauses, start=1):
        for j, lit in enumerate(clause, start=1):
            x = (i - 1) * 8 * M + 2 * M - 3 + (j - 1) * 2 * M
            vals[x_(i, j)] = x
            vals[y_(i, j)] = x + (1 if sigma[lit.var] else 2)
            vals[z_(i, j)] = x + 3
    v = Valuation.of(inst.clocks, vals)
    if not inst.Z.contains(v):
        raise AssertionError("encoded assignment fell outside Z")
    return v


def decode_valuation(inst: HardnessInstance, v: Valuation) -> dict[int, bool]:
    """Read an assignment from an integer-tight valuation."""
    sigma: dict[int, bool] = {}
    for i, clause in enumerate(inst.phi.clauses, start=1):
        for j, lit in enumerate(clause, start=1):
            gap = v[y_(i, j)] - v[x_(i, j)]
            if gap not in (1, 2):
                raise ValueError(f"block {i},{j} is not integer tight (y - x = {gap})")
            val = gap == 1
            if sigma.setdefault(lit.var, val) != val:
                raise ValueError(f"variable {lit.var} read inconsistently")
    for var in range(1, inst.phi.num_vars + 1):
        sigma.setdefault(var, False)
    return sigma


def representative_vi(inst: HardnessInstance, v: Valuation, i: int) -> Valuation:
    """Valuation with the block shapes of ``v``, border ``i`` at ``2M+1``,
    the other borders at ``2M`` and every other gap at ``2M-3``."""
    if not inst.Z.contains(v):
        raise ValueError("v must lie in Z")
    if not 1 <= i <= inst.N:
        raise ValueError(f"clause index {i} out of range")
    M = inst.M
    borders = set(inst.borders)
    vals: dict[str, Fraction] = {r_(0): Fraction(0)}
    pos = Fraction(0)
    for k in range(1, inst.N + 1):
        seq = _sequence(k)
        # seq: r, (x y z) * 3, r
        prev = seq[0]
        for j in (1, 2, 3):
            x, y, z = x_(k, j), y_(k, j), z_(k, j)
            gap = _gap_width((prev, x), k, i, borders, M)
            pos += gap
            vals[x] = pos
            vals[y] = pos + (v[y] - v[x])
            vals[z] = pos + (v[z] - v[x])
            pos = vals[z]
            prev = z
        pos += _gap_width((prev, r_(k)), k, i, borders, M)
        vals[r_(k)] = pos
    vi = Valuation.of(inst.clocks, vals)
    if not equiv_m(v, vi, M):
        raise AssertionError(f"representative for clause {i} is not equivalent to v")
    return vi


def _gap_width(pair: tuple[str, str], k: int, i: int, borders: set, M: int) -> int:
    if pair in borders:
        return 2 * M + 1 if k == i else 2 * M
    return 2 * M - 3


def border_violations(inst: HardnessInstance, v: Valuation) -> list[tuple[int, int]]:
    """Literal positions ``(i, j)`` whose border constraint ``v`` breaks."""
    M = inst.M
    out = []
    for i, clause in enumerate(inst.phi.clauses, start=1):
        e, f = inst.borders[i - 1]
        for j, lit in enumerate(clause, start=1):
            bound = inst.d[i, j] * 2 * M + 2 * M + 2
            diff = v[f] - v[y_(i, j)] if lit.positive else v[y_(i, j)] - v[e]
            if diff > bound:
                out.append((i, j))
    return out


def sat_bruteforce(phi: Cnf3, max_vars: int = 20) -> tuple[bool, dict[int, bool] | None]:
    if phi.num_vars > max_vars:
        raise ValueError(f"{phi.num_vars} variables exceed the enumeration budget of {max_vars}")
    for bits in itertools.product((False, True), repeat=phi.num_vars):
        sigma = {k + 1: b for k, b in enumerate(bits)}
        if phi.satisfied_by(sigma):
            return True, sigma
    return False, None


@dataclass
class ReductionReport:
    satisfiable: bool
    simulated: bool
    representatives_ok: bool | None = None  # every representative breaks a border constraint
    integral_witness_ok: bool | None = None
    witness: SimWitness | None = None

    @property
    def agree(self) -> bool:
        return self.satisfiable != self.simulated

    def line(self) -> str:
        left = "SAT" if self.satisfiable else "UNSAT"
        right = "simulated" if self.simulated else "not-simulated"
        return f"{left} / {right} : {'AGREE' if self.agree else 'DISAGREE'}"


def check_reduction(
    phi: Cnf3,
    M: int = 4,
    backend: str = "smt",
    solver=None,
    inst: HardnessInstance | None = None,
    shortcuts: bool = True,
) -> ReductionReport:
    inst = inst or build_instance(phi, M)
    sat, sigma = sat_bruteforce(phi)
    wit = check_simulation(inst.Z, inst.Zprime, inst.lu, backend, solver, shortcuts)
    rep = ReductionReport(sat, wit is None, witness=wit)
    if sat:
        assert sigma is not None
        v = encode_assignment(inst, sigma)
        rep.representatives_ok = all(
            border_violations(inst, representative_vi(inst, v, i)) for i in range(1, inst.N + 1)
        )
    if wit is not None:
        rep.integral_witness_ok = integral_witness_exists(inst, wit)
    return rep


def integral_witness_exists(inst: HardnessInstance, wit: SimWitness) -> bool:
    """Look for an integer-tight ``u`` in ``Z`` with no equivalent valuation in ``Z'``.

    Candidates: the floor of the witness point (integral since ``Z`` is closed
    with integer bounds) and the encodings of the assignments it rounds to.
    """
    if not is_closed(inst.Z):
        return False
    cands = [wit.v.floor()]
    try:
        cands.append(encode_assignment(inst, decode_valuation(inst, wit.v.floor())))
    except ValueError:
        pass
    lu = inst.lu
    for u in cands:
        if inst.Z.contains(u) and witness_for_valuation(u, inst.Zprime, lu) is not None:
            return True
    return False


def lower_upper_r_gaps(inst: HardnessInstance) -> list[tuple[Weight, Weight]]:
    """For each clause, the bounds of ``r_i - r_{i-1}`` implied by ``Z'``."""
    out = []
    for i in range(1, inst.N + 1):
        out.append((inst.Zprime.bound(r_(i), r_(i - 1)), inst.Zprime.bound(r_(i - 1), r_(i))))
    return out


def all_clauses(num_vars: int = 3) -> list[tuple[int, int, int]]:
    """Every normalized clause over the first three variables (eight sign patterns)."""
    out = []
    for signs in itertools.product((1, -1), repeat=3):
        lits = [s * (k + 1) for k, s in enumerate(signs)]
        out.append(tuple(sorted(lits, key=lambda x: (x < 0, abs(x)))))
    return out


UNSAT8 = [list(c) for c in all_clauses(3)]


def random_cnf3(rng: random.Random, num_vars: int, num_clauses: int) -> Cnf3:
    """Uniform random 3-CNF: three distinct variables per clause, random signs."""
    if num_vars < 3:
        raise ValueError("need at least three variables")
    clauses = []
    for _ in range(num_clauses):
        vs = rng.sample(range(1, num_vars + 1), 3)
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return Cnf3.from_ints(clauses, num_vars)
