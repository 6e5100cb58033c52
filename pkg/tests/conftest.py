import numpy as np
import pytest

from qcmdpc.keygen import CodeParams, generate_keypair

TOY = CodeParams(2, 17, 3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy_keys():
    return generate_keypair(TOY, np.random.default_rng(7))
