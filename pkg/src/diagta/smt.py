"""Linear-arithmetic encoding of non-simulation, and an SMT-LIB2 process driver.

The formula is satisfiable exactly when ``Z`` is not simulated by ``Z'``.  Its
variables are the valuation ``v<i>``, edge choices ``e_<i>_<j>``, red-source
flags ``r<i>``, per-source weights ``w<i>`` and a ``strict`` bit for the sum.
A model is turned back into a :class:`SimWitness` and re-verified locally.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dbm import LE_ZERO, Infinity, Valuation, Weight, Zone
from .model import LUBounds
from .simulation import (
    ColoredEdge,
    EdgeColor,
    SimWitness,
    WitnessError,
    gvlu_graph,
    verify_witness,
)


class SolverError(RuntimeError):
    pass


@dataclass
class SmtQuery:
    smt_text: str
    var_index: dict[str, str] = field(default_factory=dict)
    size: int = 0

    def value_names(self) -> list[str]:
        return list(self.var_index.values())


def _num(c) -> str:
    """SMT-LIB real literal; decimals keep strict QF_LRA front ends happy."""
    c = Fraction(c)
    a = abs(c)
    body = f"{a.numerator}.0" if a.denominator == 1 else f"(/ {a.numerator}.0 {a.denominator}.0)"
    return f"(- {body})" if c < 0 else body


def _or(xs: Sequence[str]) -> str:
    if not xs:
        return "false"
    return xs[0] if len(xs) == 1 else "(or " + " ".join(xs) + ")"


def _and(xs: Sequence[str]) -> str:
    if not xs:
        return "true"
    return xs[0] if len(xs) == 1 else "(and " + " ".join(xs) + ")"


def _cmp(w: Weight, lhs: str) -> str:
    op = "<=" if w.closed else "<"
    return f"({op} {lhs} {_num(w.bound)})"


def encode_not_simulated(z: Zone, z2: Zone, lu: LUBounds) -> SmtQuery:
    if z is None or z2 is None:
        raise ValueError("both zones must be non-empty")
    if z.clocks != z2.clocks or tuple(lu.clocks) != z.clocks:
        raise ValueError("clock mismatch between zones and bounds")
    clocks = z.clocks
    n = len(clocks)
    idx = range(n)
    pairs = [(i, j) for i in idx for j in idx if i != j]
    v = [f"v{i}" for i in idx]
    e = {(i, j): f"e_{i}_{j}" for i, j in pairs}
    r = [f"r{i}" for i in idx]
    w = [f"w{i}" for i in idx]
    diff = {(i, j): f"(- {v[j]} {v[i]})" for i, j in pairs}

    out = ["(set-option :produce-models true)", "(set-logic QF_LRA)"]
    out += [f"(declare-const {x} Real)" for x in v + w]
    out += [f"(declare-const {x} Bool)" for x in list(e.values()) + r + ["strict"]]
    var_index: dict[str, str] = {}
    for i in idx:
        var_index[f"v[{clocks[i]}]"] = v[i]
        var_index[f"r[{clocks[i]}]"] = r[i]
        var_index[f"w[{clocks[i]}]"] = w[i]
    for (i, j), name in e.items():
        var_index[f"e[{clocks[i]}->{clocks[j]}]"] = name
    var_index["strict"] = "strict"
    for i, j in pairs:
        out.append(f"(define-fun red_{i}_{j} () Bool (and {e[i, j]} {r[i]}))")
        out.append(f"(define-fun blue_{i}_{j} () Bool (and {e[i, j]} (not red_{i}_{j})))")

    # v lies in Z
    out.append(f"(assert (= {v[0]} 0.0))")
    for i, j in pairs:
        c = z.m[i][j]
        if c.finite:
            out.append(f"(assert {_cmp(c, diff[i, j])})")
    # a non-empty union of vertex-disjoint cycles
    out.append(f"(assert {_or(list(e.values()))})")
    for i in idx:
        inc = [e[j, i] for j in idx if j != i]
        outg = [e[i, j] for j in idx if j != i]
        out.append(f"(assert (=> {_or(inc)} {_or(outg)}))")
    for i in idx:
        others = [j for j in idx if j != i]
        for a in range(len(others)):
            for b in range(a + 1, len(others)):
                j, k = others[a], others[b]
                out.append(f"(assert (not (and {e[i, j]} {e[i, k]})))")
                out.append(f"(assert (not (and {e[j, i]} {e[k, i]})))")
    # red edges leave red sources and are never followed by another red edge
    for i in idx:
        succ = [f"(and {e[i, j]} (not {r[j]}))" for j in idx if j != i]
        out.append(f"(assert (=> {r[i]} {_or(succ)}))")

    strict_sources: list[str] = []
    for i, j in pairs:
        lo = lu.lower(clocks[j], clocks[i])
        up = lu.upper(clocks[j], clocks[i])
        red, blue = f"red_{i}_{j}", f"blue_{i}_{j}"
        d = diff[i, j]
        # blue edges exist only up to U
        if isinstance(up, Infinity):
            out.append(f"(assert (not {blue}))")
        else:
            out.append(f"(assert (=> {blue} (<= {d} {_num(up)})))")
        c2 = z2.m[i][j]
        if not c2.finite:
            out.append(f"(assert (not {red}))")
        elif c2.closed:
            out.append(f"(assert (=> {red} (= {w[i]} {_num(c2.bound)})))")
        else:
            out.append(f"(assert (=> {red} (and (= {w[i]} {_num(c2.bound)}) strict)))")
            strict_sources.append(red)
        if isinstance(lo, Infinity):
            out.append(f"(assert (not {blue}))")
            continue
        cond1 = f"(< {d} {_num(lo)})"
        cond2 = f"(and (<= {_num(lo)} {d}) (<= {d} {_num(up)}))" if not isinstance(up, Infinity) else "false"
        out.append(f"(assert (=> (and {blue} {cond1}) (and (= {w[i]} {_num(lo)}) strict)))")
        out.append(f"(assert (=> (and {blue} {cond2}) (= {w[i]} {d})))")
        strict_sources.append(f"(and {blue} {cond1})")
    for i in idx:
        outg = [e[i, j] for j in idx if j != i]
        out.append(f"(assert (=> (not {_or(outg)}) (= {w[i]} 0.0)))")
    # the strict bit may only be set by an edge that is actually strict
    out.append(f"(assert (=> strict {_or(strict_sources)}))")
    total = "(+ " + " ".join(w) + ")" if n > 1 else w[0]
    out.append(f"(assert (or (< {total} 0.0) (and strict (= {total} 0.0))))")
    text = "\n".join(out) + "\n"
    return SmtQuery(text, var_index, n)


# --- s-expressions ------------------------------------------------------------


def _tokens(text: str):
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == '"':
            j = text.index('"', i + 1)
            yield text[i : j + 1]
            i = j + 1
        elif ch == "|":
            j = text.index("|", i + 1)
            yield text[i + 1 : j]
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexpr(text: str):
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError(f"unbalanced s-expression: {text!r}")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError(f"unbalanced s-expression: {text!r}")
    return stack[0]


def sexpr_value(x) -> Fraction | bool:
    """Exact value of a model term: numerals, decimals, ``(- t)``, ``(/ a b)``, booleans."""
    if isinstance(x, str):
        if x == "true":
            return True
        if x == "false":
            return False
        return Fraction(x)
    if len(x) == 2 and x[0] == "-":
        return -sexpr_value(x[1])
    if len(x) == 3 and x[0] == "/":
        return Fraction(sexpr_value(x[1])) / Fraction(sexpr_value(x[2]))
    raise SolverError(f"cannot read model value {x!r}")


# --- solver process -------------------------------------------------------------


class SmtSolver:
    """Runs one SMT-LIB2 process per query over stdin/stdout."""

    def __init__(self, path: str | None = None, args: Sequence[str] | None = None) -> None:
        path = path or os.environ.get("DIAGTA_SOLVER") or "z3"
        resolved = shutil.which(path) if os.sep not in path else path
        if resolved is None or not os.path.exists(resolved):
            raise SolverError(f"solver executable {path!r} not found")
        self.path = resolved
        if args is None:
            args = ["-in"] if os.path.basename(resolved).startswith("z3") else ["--lang", "smt2", "--incremental"]
        self.args = list(args)
        self.queries = 0

    @classmethod
    def from_cli(cls, path: str | None, args: str | None) -> SmtSolver:
        return cls(path, shlex.split(args) if args else None)

    def solve(self, query: str, names: Sequence[str]) -> tuple[str, dict[str, Fraction | bool]]:
        """Return ``("sat", model)`` or ``("unsat", {})``."""
        self.queries += 1
        try:
            proc = subprocess.Popen(
                [self.path, *self.args],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SolverError(f"cannot launch {self.path}: {exc}") from exc
        assert proc.stdin is not None and proc.stdout is not None
        try:
            proc.stdin.write(query)
            proc.stdin.write("(check-sat)\n")
            proc.stdin.flush()
            status = self._read_line(proc)
            if status.startswith("(error"):
                raise SolverError(f"solver error: {status}")
            if status == "unsat":
                return "unsat", {}
            if status != "sat":
                raise SolverError(f"solver answered {status!r}")
            proc.stdin.write("(get-value (" + " ".join(names) + "))\n")
            proc.stdin.flush()
            text = self._read_balanced(proc)
            if text.lstrip().startswith("(error"):
                raise SolverError(f"solver error: {text.strip()}")
            model: dict[str, Fraction | bool] = {}
            for name, val in parse_sexpr(text)[0]:
                model[name] = sexpr_value(val)
            return "sat", model
        finally:
            try:
                proc.stdin.write("(exit)\n")
                proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            proc.stdout.close()
            if proc.stderr is not None:
                proc.stderr.close()

    def _read_line(self, proc: subprocess.Popen) -> str:
        while True:
            line = proc.stdout.readline()
            if not line:
                err = proc.stderr.read() if proc.stderr else ""
                raise SolverError(f"solver exited without an answer {err.strip()!r}")
            line = line.strip()
            if line and line != "success":
                return line

    def _read_balanced(self, proc: subprocess.Popen) -> str:
        buf = []
        depth = 0
        started = False
        while True:
            line = proc.stdout.readline()
            if not line:
                raise SolverError("solver closed the stream inside get-value")
            buf.append(line)
            for ch in line:
                if ch == "(":
                    depth += 1
                    started = True
                elif ch == ")":
                    depth -= 1
            if started and depth <= 0:
                return "".join(buf)


def default_solver() -> SmtSolver:
    return SmtSolver()


def witness_from_model(z: Zone, z2: Zone, lu: LUBounds, model: dict[str, Fraction | bool]) -> SimWitness:
    clocks = z.clocks
    n = len(clocks)
    vals = [Fraction(model[f"v{i}"]) for i in range(n)]
    # clocks are read back exactly; a zero clock off zero would be an encoding bug
    v = Valuation(clocks, vals)
    succ: dict[int, int] = {}
    for i in range(n):
        for j in range(n):
            if i != j and model.get(f"e_{i}_{j}") is True:
                if i in succ:
                    raise WitnessError(f"vertex {clocks[i]} has two chosen successors")
                succ[i] = j
    gv = gvlu_graph(v, lu)
    seen: set[int] = set()
    for start in sorted(succ):
        if start in seen:
            continue
        cyc = []
        x = start
        while x not in seen:
            seen.add(x)
            if x not in succ:
                raise WitnessError(f"chosen edges end at {clocks[x]}")
            y = succ[x]
            red = model.get(f"r{x}") is True
            w = z2.m[x][y] if red else gv.m[x][y]
            cyc.append(ColoredEdge(clocks[x], clocks[y], EdgeColor.ZONE if red else EdgeColor.LU, w))
            x = y
        if x != start:
            raise WitnessError("chosen edges do not close into a cycle")
        wit = SimWitness(v, tuple(cyc))
        if all(e.weight.finite for e in cyc) and wit.total() < LE_ZERO:
            verify_witness(z, z2, lu, wit)
            return wit
    raise WitnessError("solver model contains no negative cycle")


def smt_not_simulated(z: Zone, z2: Zone, lu: LUBounds, solver: SmtSolver | None = None) -> SimWitness | None:
    solver = solver or default_solver()
    q = encode_not_simulated(z, z2, lu)
    status, model = solver.solve(q.smt_text, q.value_names())
    if status == "unsat":
        return None
    return witness_from_model(z, z2, lu, model)
