import json
from pathlib import Path

import pytest

from powalloc import _pykernels

try:
    from powalloc import _ckernels
except ImportError:
    _ckernels = None

ORACLES = json.loads((Path(__file__).parent / "data" / "oracles.json").read_text())

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def kern(request):
    return request.param


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
