import warnings

import pytest

from fracbubble import FracParams


@pytest.fixture(scope="session")
def params_2_half():
    return FracParams.make(2, 0.5)


@pytest.fixture(scope="session")
def params_2_quarter():
    return FracParams.make(2, 0.25)


@pytest.fixture()
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield
