import json
from pathlib import Path

import numpy as np
import pytest

from wiretap import GramPair

ROOT = Path(__file__).resolve().parent.parent
EXAMPLE_FILE = ROOT / 'data' / 'example_channel.json'

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record and print the outcome of a numbered acceptance criterion."""
    results = request.config.stash[_RESULTS]

    def record(number, ok, detail=''):
        line = f'criterion {number:2d}: {"PASS" if ok else "FAIL"}  {detail}'
        print(line)
        results[number] = line
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if results:
        terminalreporter.section('acceptance criteria')
        for number in sorted(results):
            terminalreporter.write_line(results[number])


@pytest.fixture
def example_file():
    return EXAMPLE_FILE


@pytest.fixture
def example_pair():
    with open(EXAMPLE_FILE) as fh:
        obj = json.load(fh)
    return GramPair(np.array(obj['W1']), np.array(obj['W2']))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
