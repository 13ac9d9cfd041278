import numpy as np
import pytest
from hypothesis import settings, strategies as st

from obsent.sampling import SamplerConfig

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE[criterion] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# hypothesis: seeds and dimensions, objects are built by the samplers
dims = st.integers(min_value=2, max_value=5)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
configs = st.builds(SamplerConfig, seed=seeds, dim=dims, outcome_count=st.integers(2, 5))

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
