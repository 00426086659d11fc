import numpy as np
import pytest

from pdsparse.projections import ball_norm


def make_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_feasible(rng, shape, kind, radius):
    """Random point strictly inside the given ball, by direct rescaling."""
    V = rng.standard_normal(shape)
    n = ball_norm(V, kind)
    if n == 0:
        return V
    return V * (radius / n) * float(rng.uniform(0.1, 0.999))


@pytest.fixture
def rng():
    return make_rng(0)
