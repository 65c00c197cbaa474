"""
Phase Schemas
Phase-diagram points and unistochastic matrices for spectrum-preserving inputs.
"""

from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.core.exceptions import ConfigError
from app.schemas.state import BroadcastReport

Regime = Literal["product", "broadcasting", "full_information"]


class PhasePoint(BaseModel):
    f: float
    regime: Regime
    I_value: float
    t_over_tauD: float
    observed_photons: float
    micro: bool = False
    # False when I_value is only the accessible-information lower bound
    exact: bool = True


class StochasticMatrixP(BaseModel):
    """P_ij = |<phi_i|x_j>|^2 for an orthonormal basis phi and the pointer basis x."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _bistochastic(cls, value):
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ConfigError(f"stochastic matrix must be square, got shape {arr.shape}")
        if np.any(arr < -1e-15):
            raise ConfigError("stochastic matrix has negative entries")
        if np.max(np.abs(arr.sum(axis=0) - 1)) > 1e-12 or np.max(np.abs(arr.sum(axis=1) - 1)) > 1e-12:
            raise ConfigError("rows and columns of the matrix must sum to 1")
        return arr

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


class PFBroadcastReport(BaseModel):
    input_spectrum: Tuple[float, ...]
    output_spectrum: Tuple[float, ...]
    deviation: float
    stationary: bool
    broadcast: Optional[BroadcastReport] = None
