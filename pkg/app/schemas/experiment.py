"""
Experiment Schemas
Run configuration parsed from JSON and command-line overrides, and run results.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from app.core.config import BROADCAST_TOL, DEFAULT_SHELL_RESOLUTION, REDUNDANCY_DELTA
from app.core.exceptions import ConfigError, RegimeError
from app.schemas.operator import DensityOperator
from app.schemas.scatter import EvolutionMode, Mode, SphereModel

ExperimentKind = Literal[
    "decoherence", "phase-diagram", "mixed-env", "counterexample",
    "pf-broadcast", "oracle-check", "bound-check",
]


# ============================================================================
# SOURCES
# ============================================================================

class MeasureSpec(BaseModel):
    """Photon environment: a single pure mode, an inline mode list or an isotropic grid."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["single", "inline", "isotropic"] = "single"
    modes: Optional[List[Mode]] = None
    shell_resolution: PositiveInt = DEFAULT_SHELL_RESOLUTION
    k: Optional[PositiveFloat] = None
    n_points: Optional[PositiveInt] = None

    @model_validator(mode="after")
    def _check_source(self):
        if self.kind == "inline" and not self.modes:
            raise ConfigError("inline measure needs a non-empty 'modes' list")
        if self.kind == "isotropic" and (self.k is None or self.n_points is None):
            raise ConfigError("isotropic measure needs 'k' and 'n_points'")
        return self


class SystemStateSpec(BaseModel):
    """Initial qubit state as a Bloch vector or as (re, im) matrix entries."""

    model_config = ConfigDict(extra="forbid")

    bloch: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    matrix: Optional[List[List[Tuple[float, float]]]] = None

    @model_validator(mode="after")
    def _check_state(self):
        try:
            self.to_density()
        except RegimeError as exc:
            raise ConfigError(f"system state is not a density operator: {exc}") from exc
        return self

    def to_density(self) -> DensityOperator:
        if self.matrix is not None:
            arr = np.array([[complex(re, im) for re, im in row] for row in self.matrix])
            return DensityOperator(matrix=arr)
        x, y, z = self.bloch
        if x * x + y * y + z * z > 1.0 + 1e-12:
            raise ConfigError(f"Bloch vector {self.bloch} lies outside the unit ball")
        return DensityOperator(matrix=0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]]))


# ============================================================================
# EXPERIMENT CONFIG
# ============================================================================

def _default_model() -> SphereModel:
    return SphereModel(
        a=1e-6, epsilon=2.0, delta_x=1e-7, theta=0.0, k0=1e4, box_L=1.0, photon_density=1e14,
    )


class ExperimentConfig(BaseModel):
    """All SI units; times are given in units of the (modified) decoherence time."""

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    model: SphereModel = Field(default_factory=_default_model)
    measure: MeasureSpec = Field(default_factory=MeasureSpec)
    system: SystemStateSpec = Field(default_factory=SystemStateSpec)

    f: float = Field(0.5, ge=0.0, le=1.0)
    m: float = Field(0.25, gt=0.0, le=1.0)
    times: List[float] = Field(default_factory=lambda: [float(i) for i in range(11)])
    phase_time: PositiveFloat = 30.0
    f_grid: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])
    micro_counts: List[int] = Field(default_factory=lambda: [3])
    mode: EvolutionMode = "thermodynamic"

    tol: PositiveFloat = BROADCAST_TOL
    delta: PositiveFloat = REDUNDANCY_DELTA
    p: float = Field(0.3, gt=0.0, lt=1.0)
    nt: int = Field(8, ge=0)
    configs: PositiveInt = 100
    seed: int = 0
    phi_basis: Optional[List[List[Tuple[float, float]]]] = None
    spectrum: Optional[Tuple[float, float]] = None
    pf_samples: PositiveInt = 50

    output: str = "results"

    @model_validator(mode="after")
    def _check_grids(self):
        if any(t < 0 for t in self.times):
            raise ConfigError("times must be non-negative")
        if any(not 0.0 <= f <= 1.0 for f in self.f_grid):
            raise ConfigError("f_grid entries must lie in [0, 1]")
        if any(mu < 0 for mu in self.micro_counts):
            raise ConfigError("micro_counts must be non-negative")
        return self

    def basis_array(self) -> Optional[np.ndarray]:
        if self.phi_basis is None:
            return None
        return np.array([[complex(re, im) for re, im in row] for row in self.phi_basis])


class ExperimentResult(BaseModel):
    kind: ExperimentKind
    columns: List[str]
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any]
