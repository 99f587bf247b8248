from __future__ import annotations

import numpy as np
import pytest

from vco.model import Configuration, Instance


def uniform_instance(n: int, d: float = 1.0, dv: float = 5.0, f: float = 0.1, f_min: int = 1) -> Instance:
    D = np.full((n, n), d)
    np.fill_diagonal(D, 0.0)
    return Instance(D=D, dv=np.full(n, dv), f=np.full(n, f), f_min=f_min)


def random_instance(rng: np.random.Generator, n: int, f_max: float = 0.3) -> Instance:
    D = rng.uniform(1, 100, (n, n))
    np.fill_diagonal(D, 0.0)
    return Instance(D=D, dv=rng.uniform(1, 100, n), f=rng.uniform(0, f_max, n))


def asym_instance() -> Instance:
    """Committee {0; 1, 2, 3} whose candidate backups have exd 15, 16 and 11."""
    D = np.ones((4, 4))
    np.fill_diagonal(D, 0.0)
    D[1, 2], D[1, 3] = 2.0, 3.0
    D[2, 1], D[2, 3] = 3.0, 3.0
    D[3, 1], D[3, 2] = 1.0, 1.0
    return Instance(D=D, dv=np.array([8.0, 10.0, 10.0, 9.0]), f=np.full(4, 0.2))


@pytest.fixture
def tiny8() -> Instance:
    return uniform_instance(8)


@pytest.fixture
def single8() -> Configuration:
    return Configuration((0,) * 8)


@pytest.fixture
def split8() -> Configuration:
    return Configuration((0, 0, 0, 0, 4, 4, 4, 4))


@pytest.fixture
def asym() -> Instance:
    return asym_instance()
