import pytest

from xtalk.scenario import default_bus
from xtalk.simulator import step_responses

_RESPONSES = {}


@pytest.fixture(scope="session")
def bus():
    """Reference bus factory: ``bus(m)`` gives the bundled parameters on m wires."""
    return default_bus


@pytest.fixture(scope="session")
def responses():
    """Cached unit-step responses of the reference bus, keyed by wire count."""

    def get(m):
        if m not in _RESPONSES:
            _RESPONSES[m] = step_responses(default_bus(m))
        return _RESPONSES[m]

    return get
