from __future__ import annotations

import os
import shutil
import sys

import pytest

from diagta.smt import SmtSolver


def _solver_path() -> str | None:
    path = os.environ.get("DIAGTA_SOLVER") or "z3"
    return shutil.which(path) or (path if os.path.exists(path) else None)


@pytest.fixture(scope="session")
def solver() -> SmtSolver:
    if _solver_path() is None:
        pytest.skip("no SMT solver on PATH (install z3 or set DIAGTA_SOLVER)")
    return SmtSolver()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
