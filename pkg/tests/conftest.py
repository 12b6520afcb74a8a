import pytest

from giantwalk.harness import ExperimentConfig, run_experiment
from giantwalk.theory import Params


@pytest.fixture(scope="session")
def diag_report():
    """200 replicas at n = 1e5, lambda = 1.5: the diagnostic configuration."""
    config = ExperimentConfig(Params.from_lambda(10**5, 1.5), replicas=200, master_seed=1)
    return run_experiment(config)


@pytest.fixture(scope="session")
def clt_report():
    """4000 replicas at n = 1e5, lambda = 1.5, seed 1."""
    config = ExperimentConfig(Params.from_lambda(10**5, 1.5), replicas=4000, master_seed=1)
    return run_experiment(config)


ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
