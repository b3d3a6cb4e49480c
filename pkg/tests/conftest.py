import pytest

from ecaliquot import fixtures

CURVE_NAMES = ("E1", "E2", "E3", "E4", "E5")


@pytest.fixture(scope="session")
def curves():
    return {name: fixtures.curve(name) for name in CURVE_NAMES}
