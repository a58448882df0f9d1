import pytest

from helpers import draw_discrete


@pytest.fixture(scope="session")
def discrete_data():
    return draw_discrete()
