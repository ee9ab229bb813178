import numpy as np
import pytest

from cocycle_lab.rotation import RotationNumber
from cocycle_lab.model import build_two_bump_model


@pytest.fixture(scope="session")
def golden():
    return RotationNumber.golden(40)


@pytest.fixture(scope="session")
def omega_cond_a():
    # a large partial quotient (a_6 = 50) opens wide primary-dominance gaps
    return RotationNumber.from_quotients([1, 1, 1, 1, 1, 50] + [1] * 24)


@pytest.fixture(scope="session")
def resonant_model(golden):
    """Two-bump model aligned at the order-1 resonance (t0 = 0)."""
    c0 = 0.1
    c1_0 = (c0 + golden.value) % 1.0
    return build_two_bump_model(golden, c0, c1_0, sign=+1, r0=1.0, r1=-1.0,
                                eps=1e-2, lambda0=30.0, t=0.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
