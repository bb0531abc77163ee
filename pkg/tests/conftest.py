import numpy as np
import pytest
from scipy.stats import unitary_group

from holonomy_lab import settings
from holonomy_lab.schemas import ModelKind, ModelSpec


@pytest.fixture
def rng():
    """Seeded generator (HOLONOMY_LAB_SEED or the default seed)."""
    return settings.get_rng()


@pytest.fixture
def random_unitary(rng):
    def draw(n: int) -> np.ndarray:
        return unitary_group.rvs(n, random_state=rng)
    return draw


@pytest.fixture
def spin_half():
    return ModelSpec(kind=ModelKind.KICKED_SPIN_HALF, T=1.0, p=1)


@pytest.fixture
def spin_three_half():
    return ModelSpec(kind=ModelKind.KICKED_SPIN_THREE_HALF, T=1.0, p=1)
