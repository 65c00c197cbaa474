"""
Scattering Schemas
Illuminated-sphere parameters and photon spectral measures.
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt,
    model_validator,
)

from app.core.config import (
    DEFAULT_SHELL_RESOLUTION, DIPOLE_THRESHOLD, SOFT_SECTOR_THRESHOLD, SPEED_OF_LIGHT, TOL_PROB,
)
from app.core.exceptions import ConfigError, RegimeError


# ============================================================================
# SPHERE MODEL
# ============================================================================

EvolutionMode = Literal["finite_box", "thermodynamic"]


class SphereModel(BaseModel):
    """Dielectric sphere at one of two positions separated by delta_x along z.

    All quantities are SI. ``theta`` is the angle between the incoming photon
    direction and the displacement, which is taken as the z axis.
    """

    model_config = ConfigDict(frozen=True)

    a: PositiveFloat
    epsilon: PositiveFloat
    delta_x: NonNegativeFloat
    theta: float = 0.0
    k0: PositiveFloat
    box_L: PositiveFloat
    photon_density: PositiveFloat
    c: PositiveFloat = SPEED_OF_LIGHT
    soft_threshold: PositiveFloat = SOFT_SECTOR_THRESHOLD
    dipole_threshold: PositiveFloat = DIPOLE_THRESHOLD
    offdiag_scale: NonNegativeFloat = 1.0

    @model_validator(mode="after")
    def _check_regime(self):
        if self.k0 * self.delta_x >= self.soft_threshold:
            raise RegimeError(
                f"k0*delta_x = {self.k0 * self.delta_x:.3e} outside the soft sector (< {self.soft_threshold})"
            )
        if self.k0 * self.a >= self.dipole_threshold:
            raise RegimeError(
                f"k0*a = {self.k0 * self.a:.3e} outside the dipole regime (< {self.dipole_threshold})"
            )
        return self

    @property
    def a_tilde(self) -> float:
        return float(self.a * np.cbrt((self.epsilon - 1.0) / (self.epsilon + 2.0)))

    @property
    def a_tilde6(self) -> float:
        return self.a_tilde ** 6

    @property
    def axis(self) -> np.ndarray:
        return np.array([0.0, 0.0, 1.0])

    @property
    def k0_vector(self) -> np.ndarray:
        return self.k0 * np.array([np.sin(self.theta), 0.0, np.cos(self.theta)])

    def dimensionless_groups(self) -> dict:
        return {
            "k0_delta_x": self.k0 * self.delta_x,
            "k0_a": self.k0 * self.a,
            "k0_a_tilde": self.k0 * abs(self.a_tilde),
        }


# ============================================================================
# SPECTRAL MEASURE
# ============================================================================

class Mode(BaseModel):
    model_config = ConfigDict(frozen=True)

    k_vector: Tuple[float, float, float]
    probability: PositiveFloat


class SpectralMeasure(BaseModel):
    """Photon state diagonal in the momentum basis.

    ``shell_resolution`` is the number of equal solid-angle cells an energy
    shell is divided into; it fixes the weight of each off-diagonal
    scattering channel between modes of the same shell.
    """

    model_config = ConfigDict(frozen=True)

    modes: List[Mode] = Field(min_length=1)
    shell_resolution: PositiveInt = DEFAULT_SHELL_RESOLUTION

    @model_validator(mode="after")
    def _check_measure(self):
        total = sum(mode.probability for mode in self.modes)
        if abs(total - 1.0) > TOL_PROB:
            raise ConfigError(f"mode probabilities sum to {total!r}, expected 1")
        if any(np.linalg.norm(mode.k_vector) == 0 for mode in self.modes):
            raise ConfigError("mode with zero wave vector")
        largest = max(np.bincount(self.shell_labels()))
        if largest > self.shell_resolution:
            raise ConfigError(
                f"shell_resolution {self.shell_resolution} is smaller than the {largest} modes in one shell"
            )
        return self

    @property
    def k_vectors(self) -> np.ndarray:
        return np.array([mode.k_vector for mode in self.modes], dtype=float)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([mode.probability for mode in self.modes], dtype=float)

    @property
    def injective(self) -> bool:
        probs = np.sort(self.probabilities)
        return bool(np.all(np.diff(probs) > 0))

    def shell_labels(self) -> np.ndarray:
        """Integer label per mode; modes share a label when |k| agrees to 1e-9."""
        norms = np.linalg.norm(self.k_vectors, axis=1)
        labels = np.full(len(norms), -1, dtype=int)
        next_label = 0
        for i in np.argsort(norms):
            if labels[i] >= 0:
                continue
            same = np.abs(norms - norms[i]) <= 1e-9 * norms[i]
            labels[same & (labels < 0)] = next_label
            next_label += 1
        return labels


# ============================================================================
# REPORTS
# ============================================================================

class ReceptivityReport(BaseModel):
    eta_bar: float
    eta_bar_prime: float
    alpha: float
    tau_D_bar: float
    offdiag_dominant: bool
    unitarity_rescale: float = 1.0
    single_mode: Optional[bool] = None
