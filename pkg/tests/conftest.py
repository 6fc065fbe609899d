import numpy as np
import pytest

from samstrip.phantom import PhantomSpec, make_phantom


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def default_phantom():
    """Noiseless default phantom, shared across tests (read-only)."""
    return make_phantom(PhantomSpec())


@pytest.fixture(scope="session")
def lesion_phantom():
    return make_phantom(PhantomSpec(lesion=PhantomSpec.default_lesion()))
