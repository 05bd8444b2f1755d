import numpy as np
import pytest
from hypothesis import strategies as st

from cvcluster.graph import build_graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def graphs(draw, max_n=8, min_n=1):
    n = draw(st.integers(min_n, max_n))
    slots = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    mask = draw(st.lists(st.booleans(), min_size=len(slots), max_size=len(slots)))
    return build_graph(n, [e for e, keep in zip(slots, mask) if keep])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key, (ok, line) in results.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {line}")
