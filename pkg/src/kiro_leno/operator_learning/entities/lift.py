from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kiro_leno.operator_learning.entities.domain import BCKind
from kiro_leno.operator_learning.errors import ValidationError


@dataclass(frozen=True, eq=False)
class BoundaryLift:
    """Discrete harmonic extension u_g of static boundary data g."""

    u_g: np.ndarray
    g: np.ndarray
    bc_kind: BCKind
    static: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bc_kind", BCKind(self.bc_kind))
        if not self.static:
            raise ValidationError("only time-independent boundary data is supported")
        u_g = np.array(self.u_g, dtype=float)
        g = np.array(self.g, dtype=float)
        if u_g.shape != g.shape:
            raise ValidationError(f"lift shape {u_g.shape} does not match boundary data {g.shape}")
        for arr in (u_g, g):
            arr.setflags(write=False)
        object.__setattr__(self, "u_g", u_g)
        object.__setattr__(self, "g", g)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.u_g.shape
