import numpy as np
import pytest

from bethexx import solve


@pytest.fixture(scope="session")
def gs8():
    return solve.solve_ground_state(8)


@pytest.fixture(scope="session")
def gs12():
    return solve.solve_ground_state(12)


@pytest.fixture(scope="session")
def two_hole8(gs8):
    return solve.solve_hole_excitation(8, [2.0, 1.0])


@pytest.fixture(scope="session")
def string12():
    """Asymmetric 4-hole + one 2-string triplet at M = 12 (exact delta)."""
    return solve.solve_close_pair_state(12, [3.0, 2.0, 1.0, -2.0], n2s=1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
