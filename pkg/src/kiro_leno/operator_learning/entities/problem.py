from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kiro_leno.operator_learning.entities.domain import BoundaryCondition, DiffusionSpec, Domain
from kiro_leno.operator_learning.errors import ValidationError


class ProblemDefaults(BaseModel):
    """Experiment defaults that travel with a catalog problem."""

    record_dt: float = Field(gt=0)  # recording step tau
    train_horizon: int = Field(ge=1)
    eval_horizon: int = Field(ge=1)
    modes: int = Field(ge=1)  # P per variable
    hidden: list[int] = Field(default_factory=lambda: [1000, 1000])
    samples: int = Field(default=100, ge=1)
    epochs: int = Field(default=5000, ge=1)
    model_config = ConfigDict(frozen=True)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A reaction-diffusion problem: geometry, boundary data, per-variable diffusion and reaction."""

    name: str
    domain: Domain
    bc: BoundaryCondition
    diffusion: tuple[DiffusionSpec, ...]
    reaction: str
    params: dict[str, float] = field(default_factory=dict)
    potential: np.ndarray | None = None
    defaults: ProblemDefaults | None = None

    def __post_init__(self):
        object.__setattr__(self, "diffusion", tuple(self.diffusion))
        if not self.diffusion:
            raise ValidationError("problem needs at least one diffusion coefficient")
        if self.bc.g is not None and self.bc.g.shape != self.domain.shape:
            raise ValidationError(f"boundary data shape {self.bc.g.shape} does not match grid {self.domain.shape}")
        if self.potential is not None:
            potential = np.array(self.potential, dtype=float)
            if potential.shape != self.domain.shape:
                raise ValidationError(f"potential shape {potential.shape} does not match grid {self.domain.shape}")
            potential.setflags(write=False)
            object.__setattr__(self, "potential", potential)
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    @property
    def variables(self) -> int:
        return len(self.diffusion)

    def to_meta(self) -> dict:
        return {
            "name": self.name,
            "reaction": self.reaction,
            "bc": self.bc.kind.value,
            "params": dict(self.params),
            "diffusion": [d.to_meta() for d in self.diffusion],
            "domain": self.domain.to_meta(),
        }
