import numpy as np
import pytest

from recombsvd.seqio import SequencePopulation


def random_population(rng, n, length, alphabet="ACGT"):
    letters = np.frombuffer(alphabet.encode(), dtype=np.uint8)
    codes = letters[rng.integers(0, len(letters), size=(n, length))]
    return SequencePopulation.from_codes(codes)


def naive_smoothed_row(a: str, b: str, w: int) -> list[int]:
    """Direct recount of every full window; shares no code with the library."""
    out = []
    for y in range(w + 1, len(a) - w + 1):  # 1-based centres
        lo, hi = y - w - 1, y + w
        out.append(sum(1 for p, q in zip(a[lo:hi], b[lo:hi]) if p != q))
    return out


def naive_matrix(pop, w):
    rows = []
    for i in range(pop.n):
        for j in range(i + 1, pop.n):
            rows.append(naive_smoothed_row(pop.sequences[i], pop.sequences[j], w))
    return np.array(rows)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line for the terminal summary."""

    def record(criterion: str, passed: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
