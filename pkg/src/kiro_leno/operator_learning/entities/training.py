from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kiro_leno.operator_learning.entities.coeff_net import AdamSettings


class LossMode(str, Enum):
    COMBINED = "combined"
    DATA_ONLY = "data-only"
    RESIDUAL_ONLY = "residual-only"

    @property
    def uses_data(self) -> bool:
        return self != LossMode.RESIDUAL_ONLY

    @property
    def uses_residual(self) -> bool:
        return self != LossMode.DATA_ONLY


class TrainConfig(BaseModel):
    epochs: int = Field(default=5000, ge=1)
    loss_mode: LossMode = LossMode.COMBINED
    eps_floor: float = Field(default=1e-12, gt=0)
    seed: int = 0
    optimizer: AdamSettings = Field(default_factory=AdamSettings)
    horizon: int | None = Field(default=None, ge=1)  # rollout steps N, None = all
    log_every: int = Field(default=100, ge=1)
    checkpoint_every: int | None = Field(default=None, ge=1)
    checkpoint_dir: Path | None = None
    model_config = ConfigDict(frozen=True)


class EpochRecord(BaseModel):
    """One row of the training history."""

    epoch: int
    loss: float
    loss_data: float
    loss_residual: float
    lr: float
    wall: float


@dataclass(frozen=True, eq=False)
class RolloutState:
    """Semi-implicit rollout from data coefficients.

    betas[:, 0] equals the initial data coefficients exactly; factors holds
    the diagonal (1 + tau_n Lambda)^-1 per step, shape (N, cP).
    """

    betas: np.ndarray  # (M, N+1, cP)
    times: np.ndarray
    factors: np.ndarray

    @property
    def steps(self) -> int:
        return int(self.betas.shape[1] - 1)
