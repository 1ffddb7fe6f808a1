import pytest

from wayfinder.levels import builtin_levels


@pytest.fixture(scope="session")
def levels():
    return builtin_levels()


@pytest.fixture(scope="session")
def level1(levels):
    return levels[0]


@pytest.fixture(scope="session")
def level2(levels):
    return levels[1]


@pytest.fixture(scope="session")
def level3(levels):
    return levels[2]
