import contextlib
import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def permanent(mat: np.ndarray) -> complex:
    n = mat.shape[0]
    return sum((np.prod([mat[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n))), 0j)


def transition_amplitude(unitary: np.ndarray, occ_in, occ_out) -> complex:
    """<out| U |in> for bosons, U acting on creation operators as a_j^+ -> sum_k U[j, k] b_k^+."""
    if sum(occ_in) != sum(occ_out):
        return 0j
    rows = [j for j, n in enumerate(occ_in) for _ in range(n)]
    cols = [k for k, n in enumerate(occ_out) for _ in range(n)]
    if not rows:
        return 1 + 0j
    sub = unitary[np.ix_(rows, cols)]
    norm = math.prod(math.factorial(n) for n in occ_in) * math.prod(math.factorial(n) for n in occ_out)
    return permanent(sub) / math.sqrt(norm)


@pytest.fixture
def perm_amplitude():
    return transition_amplitude


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    @contextlib.contextmanager
    def run(number: int, title: str, limit: float | None = None):
        start = time.perf_counter()
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - start
            if limit is not None:
                assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({elapsed:.2f}s)"
            lines.append((number, line))
            print(line)

    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
