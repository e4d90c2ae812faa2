from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np
import pytest

from quadfourier.gf import Subspace
from quadfourier.quadsets import QuadraticPoly, QuadTuple


def sum_of_squares(n: int = 4, p: int = 3) -> QuadTuple:
    """``x_1^2 + ... + x_n^2``: full rank, 33 zeros when n = 4 and p = 3."""
    return QuadTuple([QuadraticPoly(np.eye(n, dtype=np.int64), None, 0, p)])


@pytest.fixture
def pinned_tuple() -> QuadTuple:
    return sum_of_squares()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def F33() -> Subspace:
    return Subspace.full(3, 3)


_LINES = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Time a criterion body, enforce its runtime limit and log PASS/FAIL."""
    lines = request.config.stash.setdefault(_LINES, {})

    @contextmanager
    def run(k: int, limit: float | None = None):
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield
            elapsed = time.perf_counter() - t0
            if limit is not None and elapsed > limit:
                raise AssertionError(f"criterion {k} took {elapsed:.1f} s, limit {limit} s")
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - t0
            cap = "" if limit is None else f", limit {limit:g} s"
            lines[k] = f"CRITERION {k}: {status} ({elapsed:.2f} s{cap})"
            print(lines[k])

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
