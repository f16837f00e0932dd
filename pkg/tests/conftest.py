import numpy as np
import pytest

from gapbound import build_generator
from gapbound.rng import make_rng


@pytest.fixture
def two_state():
    """The 2-state chain with rates a=0.3 (1->2) and b=0.7 (2->1)."""
    return build_generator(2, [(1, 2, 0.3), (2, 1, 0.7)])


def random_symmetric(M: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    A = rng.uniform(-1.0, 1.0, (M, M))
    return (A + A.T) / 2.0
