import pytest

from threatfuse.scenario import builtin_scenario


@pytest.fixture(scope="session")
def basic():
    return builtin_scenario("basic")


@pytest.fixture(scope="session")
def cbrne():
    return builtin_scenario("cbrne")
