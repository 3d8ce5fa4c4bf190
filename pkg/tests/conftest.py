import pytest

from tamatrack import _backend
from tamatrack.core import TrackerConfig

from .helpers import ACCEPTANCE_LINES


@pytest.fixture(params=_backend.available())
def kern(request):
    """Each kernel backend importable here (compiled first, then the fallback)."""
    return _backend.get(request.param)


@pytest.fixture
def cfg():
    return TrackerConfig()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
