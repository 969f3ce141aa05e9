import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the reference module
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))  # fresh-clone runs

from entropick import SynthSpec, generate_corpus

import acceptance_log


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines:
            terminalreporter.line(line)


@pytest.fixture(scope="session")
def mechanism_corpus():
    """200 problems x 64 samples, front-loaded traces labeled correct."""
    return generate_corpus(SynthSpec(seed=0), problems=200, samples_per_problem=64)


@pytest.fixture(scope="session")
def small_corpus():
    """Quick corpus for CLI and harness tests."""
    return generate_corpus(SynthSpec(seed=3), problems=12, samples_per_problem=8)


@pytest.fixture(scope="session")
def spike_corpus():
    """Corpus with tall single-token spikes planted outside the bursts."""
    spec = SynthSpec(seed=0, spike_rate=0.003, spike_entropy=25.0)
    return generate_corpus(spec, problems=150, samples_per_problem=48)
