import sys
import os

import pytest

# Add the src directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "../src")))

from replicator_horseshoe.map_core import Params  # noqa: E402
from replicator_horseshoe.horseshoe import certify  # noqa: E402


@pytest.fixture(scope="session")
def horseshoe_params() -> Params:
    return Params(30, 1 / 3)


@pytest.fixture(scope="session")
def certificate(horseshoe_params):
    return certify(horseshoe_params)


@pytest.fixture(autouse=True)
def high_precision():
    """ mpmath oracles work at 40 significant digits """
    import mpmath
    with mpmath.workdps(40):
        yield
