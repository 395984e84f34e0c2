import functools

import numpy as np
import pytest

from anisogl import AnisotropyParams, GridSpec, make_grid
from anisogl.minimize import SolveOptions, continuation

SCHEDULE = (0.2, 0.1, 0.05)


@functools.lru_cache(maxsize=None)
def solve_chain(n, delta, D, schedule=SCHEDULE, L=1.0):
    """Converged continuation results on an n x n square, cached per session."""
    grid = make_grid(GridSpec.square(L, n))
    return tuple(continuation(grid, AnisotropyParams(delta), -D, schedule, SolveOptions()))


def solve_at(n, delta, D, eps, schedule=SCHEDULE):
    for r in solve_chain(n, delta, D, schedule):
        if np.isclose(r.eps, eps):
            return r
    raise KeyError(eps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, one line per criterion, echoed after the run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
