import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aeimpute import datasets
from aeimpute.net import TrainConfig, train


def normalized(X):
    return (X - X.min(axis=0)) / (X.max(axis=0) - X.min(axis=0))


@pytest.fixture(scope="session")
def synth():
    """The 500x7 correlated dataset, min-max normalized."""
    return normalized(datasets.correlated(500, seed=11))


@pytest.fixture(scope="session")
def trained(synth):
    model, history = train(synth, TrainConfig(hidden_sizes=[5, 3], epochs=200, seed=11))
    return model, history


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; its outcome is printed at session end."""

    def record(label):
        CRITERIA[request.node.nodeid] = [label, "FAIL", ""]

        def detail(text):
            CRITERIA[request.node.nodeid][2] = text

        return detail

    return record


def pytest_runtest_logreport(report):
    if report.when == "call" and report.nodeid in CRITERIA:
        CRITERIA[report.nodeid][1] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in sorted(CRITERIA.values()):
        terminalreporter.write_line(f"{status}  {label}  {detail}")
