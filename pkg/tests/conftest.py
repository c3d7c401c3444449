"""Shared generators for the test suite.

Random feasibility instances are built around an interior witness point
with healthy margins, so every generated family is boundedly linearly
regular with a moderate constant and all rate bounds are exercisable.
"""

from __future__ import annotations

import numpy as np
import pytest

from feaskit import Ball, HalfSpace, Problem, StringPlan


def random_problem(rng: np.random.Generator, M: int, dim: int = 2) -> Problem:
    """Half-spaces/balls in R^dim containing a common interior point."""
    w = rng.uniform(-1.0, 1.0, size=dim)
    sets = []
    for _ in range(M):
        margin = rng.uniform(0.2, 1.0)
        if rng.random() < 0.5:
            a = rng.standard_normal(dim)
            a /= np.linalg.norm(a)
            sets.append(HalfSpace(normal=a, offset=float(a @ w) + margin))
        else:
            delta = rng.standard_normal(dim)
            delta *= rng.uniform(0.3, 1.5) / max(np.linalg.norm(delta), 1e-9)
            sets.append(Ball(center=w + delta, radius=float(np.linalg.norm(delta)) + margin))
    return Problem(sets=tuple(sets), witness=w)


def random_start(rng: np.random.Generator, problem: Problem, scale: float = 3.0) -> np.ndarray:
    return problem.witness + scale * rng.standard_normal(problem.dim)


def random_plan(rng: np.random.Generator, M: int, max_strings: int = 3,
                max_len: int = 3) -> StringPlan:
    n_strings = int(rng.integers(1, max_strings + 1))
    strings = tuple(
        tuple(int(i) for i in rng.integers(1, M + 1, size=int(rng.integers(1, max_len + 1))))
        for _ in range(n_strings)
    )
    w = rng.uniform(0.2, 1.0, size=n_strings)
    w = w / w.sum()
    return StringPlan(strings=strings, weights=w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_verdict(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
