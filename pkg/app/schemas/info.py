"""
Information Schemas
Classical-quantum ensembles for Holevo-quantity evaluation.
"""

from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import TOL_PROB
from app.core.exceptions import ConfigError
from app.schemas.operator import DensityOperator


class EnsembleCQ(BaseModel):
    model_config = ConfigDict(frozen=True)

    probs: List[float] = Field(min_length=1)
    states: List[DensityOperator] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_ensemble(self):
        if len(self.probs) != len(self.states):
            raise ConfigError(f"{len(self.probs)} probabilities for {len(self.states)} states")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > TOL_PROB:
            raise ConfigError(f"ensemble probabilities {self.probs} are not a distribution")
        dims = {state.dim for state in self.states}
        if len(dims) != 1:
            raise ConfigError(f"ensemble states have mixed dimensions {sorted(dims)}")
        return self
