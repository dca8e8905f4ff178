import numpy as np
import pytest

from etrc import pipeline
from etrc.scenario import PRESETS, apply_overrides

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def example1():
    return pipeline.design(PRESETS["example1"])


@pytest.fixture(scope="session")
def example2():
    """Example 2 with the auxiliary weight that makes lambda_min(Q2) positive."""
    cfg = apply_overrides(PRESETS["example2"], ['unmatched.l_formula="printed"'])
    return pipeline.design(cfg)


@pytest.fixture(scope="session")
def runs(example1, example2):
    """Static and dynamic traces of both examples, keyed by (example, kind)."""
    out = {}
    for name, d in (("example1", example1), ("example2", example2)):
        for kind in ("static", "dynamic"):
            out[name, kind] = pipeline.run(d, kind)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
