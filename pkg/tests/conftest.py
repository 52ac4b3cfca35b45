import pytest

from plant import CircuitParams


@pytest.fixture
def params():
    """The 300 kHz, k = 0.152 prototype values."""
    return CircuitParams()
