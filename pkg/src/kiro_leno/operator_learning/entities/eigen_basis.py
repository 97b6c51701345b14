from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionSpec, Domain
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.hashing import hash_arrays


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """P eigenpairs of -div(D grad) on a grid, orthonormal in the weighted inner product.

    modes are stored on the full grid, zero at Dirichlet boundary nodes and
    outside the mask of a masked grid.
    """

    domain: Domain
    bc_kind: BCKind
    diffusion: DiffusionSpec
    lambdas: np.ndarray  # (P,)
    modes: np.ndarray  # (P, *grid)
    weights: np.ndarray  # (*grid)
    solver: str = "analytic"

    def __post_init__(self):
        object.__setattr__(self, "bc_kind", BCKind(self.bc_kind))
        lambdas = np.array(self.lambdas, dtype=float)
        modes = np.array(self.modes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if lambdas.ndim != 1 or lambdas.size == 0:
            raise ValidationError("lambdas must be a non-empty vector")
        if modes.shape != (lambdas.size, *self.domain.shape):
            raise ValidationError(f"modes shape {modes.shape} does not match P={lambdas.size} on grid {self.domain.shape}")
        if weights.shape != self.domain.shape:
            raise ValidationError(f"weights shape {weights.shape} does not match grid {self.domain.shape}")
        for arr in (lambdas, modes, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "weights", weights)

    @property
    def P(self) -> int:
        return int(self.lambdas.size)

    def check_field(self, field: np.ndarray) -> np.ndarray:
        field = np.asarray(field, dtype=float)
        grid = self.domain.shape
        if field.shape[field.ndim - len(grid):] != grid or field.ndim < len(grid):
            raise ValidationError(f"field shape {field.shape} does not end in grid {grid}")
        return field

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Weighted inner product over the trailing grid axes."""
        u, v = self.check_field(u), self.check_field(v)
        axes = tuple(range(-self.domain.dim, 0))
        return np.sum(u * v * self.weights, axis=axes)

    def norm(self, field: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(field, field), 0.0))

    def gram(self) -> np.ndarray:
        flat = self.modes.reshape(self.P, -1)
        return (flat * self.weights.reshape(-1)) @ flat.T

    @cached_property
    def hash(self) -> str:
        return hash_arrays((self.lambdas, self.modes, self.weights))

    def content_hash(self) -> str:
        return self.hash

    def to_meta(self) -> dict:
        return {
            "domain": self.domain.to_meta(),
            "bc": self.bc_kind.value,
            "diffusion": self.diffusion.to_meta(),
            "P": self.P,
            "solver": self.solver,
            "hash": self.hash,
        }
