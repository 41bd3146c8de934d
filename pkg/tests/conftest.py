"""Shared fixtures: spaces and a calibrated ball-box constant."""

import numpy as np
import pytest

from carnot import catalog
from carnot.metric import CCSpace, calibrate_ballbox


@pytest.fixture(scope="session")
def heis():
    return CCSpace(catalog.heisenberg())


@pytest.fixture(scope="session")
def engel_space():
    return CCSpace(catalog.engel())


@pytest.fixture(scope="session")
def heis_ballbox(heis):
    return calibrate_ballbox(heis, samples=150, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
