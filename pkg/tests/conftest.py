import math

import numpy as np
import pytest

from ibolab.tables import Alphabet, Kernel, ProbTable, integer_alphabet
from ibolab.world import GenerativeWorld, binary_symmetric_world, random_encoder


def random_world(rng: np.random.Generator, max_phi=3, max_x=3, max_n=3, max_m=2) -> GenerativeWorld:
    """Small random world with strictly positive prior and channel rows."""
    n_phi = int(rng.integers(1, max_phi + 1))
    n_x = int(rng.integers(2, max_x + 1))
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(0, max_m + 1))
    phi = integer_alphabet("phi", n_phi)
    x = integer_alphabet("x", n_x)
    prior = ProbTable((phi,), rng.dirichlet(np.ones(n_phi) * 2.0))
    channel = Kernel((phi,), x, rng.dirichlet(np.ones(n_x) * 2.0, size=n_phi))
    return GenerativeWorld(prior, channel, n, m)


def random_joint(rng: np.random.Generator, axes) -> ProbTable:
    shape = tuple(a.size for a in axes)
    vals = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    return ProbTable(tuple(axes), vals)


@pytest.fixture
def model_a() -> GenerativeWorld:
    """Uniform binary process, 10% observation flip, N=2, M=1."""
    return binary_symmetric_world(flip=0.1, train_size=2, future_size=1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
