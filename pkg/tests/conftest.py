import numpy as np
import pytest

from graphfilt import graph


def random_connected(n, p, seed, weighted=True):
    return graph.erdos_renyi_graph(n, p, np.random.default_rng(seed), weighted=weighted, connected=True)


def dense_poly(S, taps):
    """Oracle: sum_k h_k S^k from explicit matrix powers."""
    M = S.dense() if hasattr(S, "dense") else np.asarray(S)
    out = np.zeros_like(M)
    P = np.eye(M.shape[0])
    for h in taps:
        out = out + h * P
        P = P @ M
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one status line per acceptance criterion."""
    def _report(number: int, title: str, ok: bool, detail: str = "", soft: bool = False):
        status = "PASS" if ok else ("SOFT" if soft else "FAIL")
        line = f"criterion {number:2d} {status}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
