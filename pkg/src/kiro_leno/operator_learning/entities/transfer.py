from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from kiro_leno.operator_learning.entities.training import LossMode


class TransferConfig(BaseModel):
    """Output-layer retraining with a learned time scale alpha (and optionally a diffusion scale).

    Both scales are trained as logarithms so they stay positive.
    """

    alpha_init: float = Field(default=1.0, gt=0)
    train_alpha: bool = True
    train_diffusion: bool = False
    diffusion_init: float = Field(default=1.0, gt=0)  # multiplies the basis eigenvalues
    epochs: int = Field(default=1000, ge=0)
    lr: float = Field(default=1e-3, gt=0)
    scale_lr: float | None = Field(default=None, gt=0)  # lr for log alpha / log D, defaults to lr
    loss_mode: LossMode = LossMode.COMBINED
    eps_floor: float = Field(default=1e-12, gt=0)
    seed: int = 0
    log_every: int = Field(default=100, ge=1)
    model_config = ConfigDict(frozen=True)
