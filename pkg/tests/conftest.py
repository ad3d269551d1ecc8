import pytest

from miniwhy import corpus


@pytest.fixture(scope="session")
def quickselect_unit():
    return corpus.unit("find_nth_lowest_number")


@pytest.fixture(scope="session")
def sqrt_unit():
    return corpus.unit("sqrt_newton")


@pytest.fixture(scope="session")
def stddev_unit():
    return corpus.unit("calculate_std_dev")


@pytest.fixture(scope="session")
def translate_unit():
    return corpus.unit("rectangle_translate")


@pytest.fixture(scope="session")
def lemmas_unit():
    return corpus.unit("lemmas")
