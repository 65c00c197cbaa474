"""
Broadcast State Schemas
Factored system-plus-observed-photons states and broadcast verification reports.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeFloat, field_validator, model_validator

from app.core.config import TOL_PROB
from app.core.exceptions import ConfigError
from app.schemas.operator import DensityOperator


# ============================================================================
# FACTORED BLOCKS
# ============================================================================

class FactoredMacroState(BaseModel):
    """base^{(x) count}, kept as the single-photon factor and its exponent.

    ``count`` is real in thermodynamic runs, where photon numbers are not
    rounded; dense builds require it to be integral.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    base: np.ndarray
    count: NonNegativeFloat
    is_state: bool = False

    @field_validator("base", mode="before")
    @classmethod
    def _as_square(cls, value):
        arr = np.asarray(value, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ConfigError(f"factor base must be a non-empty square matrix, got shape {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _check_block(self):
        if self.is_state:
            DensityOperator(matrix=self.base)
        return self

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def integral_count(self) -> int:
        rounded = round(self.count)
        if abs(self.count - rounded) > 1e-9:
            raise ConfigError(f"photon count {self.count} is not an integer; dense builds need finite_box counts")
        return int(rounded)


# ============================================================================
# S : fE STATE
# ============================================================================

class SfEState(BaseModel):
    """System qubit together with the observed fraction of scattered photons.

    Diagonal part: p_i |x_i><x_i| (x) [rho_i^mac]^{(x) multiplicity}.
    Coherent part: gamma |x_1><x_2| (x) offdiag_block + h.c., where gamma already
    carries the trace over the discarded photons.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pointer_probs: Tuple[float, float]
    coherence: complex
    diag_blocks: Tuple[FactoredMacroState, FactoredMacroState]
    multiplicity: int
    offdiag_coeff: complex
    offdiag_block: FactoredMacroState

    f: float
    m: Optional[float] = None
    macro_count: Optional[int] = None
    total_photons: float
    observed_photons: float

    # log|Tr S1 rho S2^dag| and log B(rho_1^mic, rho_2^mic) per photon
    log_cross_trace: float
    log_micro_bhattacharyya: float
    pure_environment: bool = True
    underflow: bool = False

    @model_validator(mode="after")
    def _check_state(self):
        p1, p2 = self.pointer_probs
        if min(p1, p2) < -TOL_PROB or abs(p1 + p2 - 1.0) > TOL_PROB:
            raise ConfigError(f"pointer probabilities {self.pointer_probs} are not a distribution")
        if abs(self.offdiag_coeff) > np.sqrt(max(p1 * p2, 0.0)) + 1e-12:
            raise ConfigError(f"|gamma| = {abs(self.offdiag_coeff):.6e} exceeds sqrt(p1 p2)")
        return self

    @property
    def discarded_photons(self) -> float:
        return self.total_photons - self.observed_photons


# ============================================================================
# REPORTS
# ============================================================================

class BroadcastReport(BaseModel):
    coherent_trace_norm: float
    pairwise_overlap: float
    spectrum: Tuple[float, float]
    is_broadcast: bool
    tolerance: float
    redundancy: Optional[float] = None
    underflow: bool = False


class ExplicitFunctionals(BaseModel):
    """Scalar functionals read off a dense S:fE operator."""

    coherent_norm: float
    macro_overlap: Optional[float] = None
    mutual_information: float
    spectrum: Tuple[float, float]


class PhotonEncoding(BaseModel):
    """Single-photon data shared by the factored and the dense paths.

    The photon starts in ``initial``; branch 1 leaves it unchanged and branch 2
    applies ``unitary``. ``rho1``, ``rho2`` and ``cross`` are the resulting
    S1 rho S1^dag, S2 rho S2^dag and S1 rho S2^dag.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    initial: np.ndarray
    unitary: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    cross: np.ndarray
    log_cross_trace: float
    cross_phase: float = 0.0
    log_bhattacharyya: float
    pure: bool

    @property
    def dim(self) -> int:
        return self.initial.shape[0]
