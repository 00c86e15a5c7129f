import numpy as np
import pytest
from hypothesis import strategies as st


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def reward_groups(min_size=1, max_size=10):
    """Rewards in [0, 1], half the time drawn from a coarse grid so ties appear."""
    fine = st.floats(0.0, 1.0, allow_nan=False)
    coarse = st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])
    return st.one_of(
        st.lists(fine, min_size=min_size, max_size=max_size),
        st.lists(coarse, min_size=min_size, max_size=max_size),
    )


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, detail = RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
