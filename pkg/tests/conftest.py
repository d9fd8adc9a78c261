import numpy as np
import pytest

from tisrl.dataset_io import SynthSpec, synth
from tisrl.solver import TisrlConfig, run

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def synth_noisy():
    """Three-view, n=100, k=5, r=4 dataset with sigma=0.01."""
    return synth(SynthSpec(v=3, n=100, k=5, r=4, sigma=0.01, seed=0))


@pytest.fixture(scope="session")
def solved_noisy(synth_noisy):
    return run(synth_noisy, TisrlConfig(lam=0.1), threads=1)


@pytest.fixture(scope="session")
def synth_clean():
    return synth(SynthSpec(v=3, n=100, k=5, r=4, sigma=0.0, seed=0))


@pytest.fixture(scope="session")
def solved_clean(synth_clean):
    return run(synth_clean, TisrlConfig(lam=0.1), threads=1)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def report(label: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
