"""
Shared Test Fixtures
Sphere models, photon measures and seeded qubit states.
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.schemas.operator import DensityOperator
from app.schemas.scatter import Mode, SpectralMeasure, SphereModel

# box so small that a single photon decoheres noticeably (B ~ 0.16 per photon);
# the first-order phase dominates here, so only the leading-order modulus is usable
ORACLE_BOX = 1.5e-12

# the truncated overlap stays in the unit disk down to L ~ 6e-11 for delta_x = 1e-6
PERTURBATIVE_BOX = 1e-10


def qubit(x: float, y: float, z: float) -> DensityOperator:
    return DensityOperator(matrix=0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]]))


@pytest.fixture
def model() -> SphereModel:
    """Micron sphere in a 1 m box at realistic photon density."""
    return SphereModel(a=1e-6, epsilon=2.0, delta_x=1e-7, theta=0.0, k0=1e4, box_L=1.0, photon_density=1e14)


@pytest.fixture
def oracle_model() -> SphereModel:
    return SphereModel(a=1e-6, epsilon=2.0, delta_x=1e-6, theta=0.0, k0=1e4, box_L=ORACLE_BOX, photon_density=1e14)


@pytest.fixture
def small_box_model() -> SphereModel:
    return SphereModel(
        a=1e-6, epsilon=2.0, delta_x=1e-6, theta=0.0, k0=1e4, box_L=PERTURBATIVE_BOX, photon_density=1e14,
    )


@pytest.fixture
def two_mode_measure() -> SpectralMeasure:
    """Photons along the displacement or across it, on one energy shell."""
    return SpectralMeasure(modes=[
        Mode(k_vector=(0.0, 0.0, 1e4), probability=0.6),
        Mode(k_vector=(1e4, 0.0, 0.0), probability=0.4),
    ])


@pytest.fixture
def anisotropic_measure() -> SpectralMeasure:
    """Five directions on one shell plus a softer mode, distinct weights."""
    k = 1e4
    directions = [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.6, 0.0, 0.8), (0.0, 0.8, -0.6)]
    weights = [0.3, 0.25, 0.2, 0.15, 0.1]
    return SpectralMeasure(modes=[
        Mode(k_vector=tuple(k * np.array(d)), probability=w) for d, w in zip(directions, weights)
    ])


@pytest.fixture
def plus_state() -> DensityOperator:
    return qubit(1.0, 0.0, 0.0)


@pytest.fixture
def mixed_state() -> DensityOperator:
    return qubit(0.3, -0.4, 0.2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
