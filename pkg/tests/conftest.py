import numpy as np
import pytest

from covhyp import catalog


@pytest.fixture(params=catalog.NAMES)
def system(request):
    return catalog.build(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
