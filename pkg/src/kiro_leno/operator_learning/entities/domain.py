"""
Geometry, boundary and diffusion descriptions for the discrete spatial domain.

Grids follow two conventions:
- interval / rectangle: nodes include both end points, spacing h = L / (n - 1)
- masked-grid: pixel centres of a uniform n-per-axis grid, spacing h = L / n
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from kiro_leno.operator_learning.errors import ValidationError


class DomainKind(str, Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"
    MASKED_GRID = "masked-grid"


class BCKind(str, Enum):
    HOMOGENEOUS_DIRICHLET = "homogeneous-dirichlet"
    INHOMOGENEOUS_DIRICHLET = "inhomogeneous-dirichlet"
    NEUMANN = "neumann"


class DiffusionKind(str, Enum):
    CONSTANT = "constant"
    SCALAR_FIELD = "scalar-field"
    SPD_MATRIX_FIELD = "spd-matrix-field"


@dataclass(frozen=True, eq=False)
class Domain:
    """Uniform tensor grid on an interval, a rectangle or a masked pixel region."""

    kind: DomainKind
    bounds: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    mask: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        expected_dim = 1 if self.kind == DomainKind.INTERVAL else 2
        if len(self.bounds) != expected_dim or len(self.resolution) != expected_dim:
            raise ValidationError(f"{self.kind.value} domain needs {expected_dim} bounds and resolutions")
        for a, b in self.bounds:
            if not b > a:
                raise ValidationError(f"bounds ({a}, {b}) must have positive length")
        if min(self.resolution) < 4:
            raise ValidationError(f"resolution {self.resolution} must be >= 4 per axis")
        if self.kind == DomainKind.MASKED_GRID:
            if self.mask is None:
                raise ValidationError("masked-grid domain requires a mask")
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != self.resolution:
                raise ValidationError(f"mask shape {mask.shape} does not match resolution {self.resolution}")
            if not mask.any():
                raise ValidationError("mask must mark at least one interior cell")
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)
        elif self.mask is not None:
            raise ValidationError("mask is only allowed on masked-grid domains")

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> Domain:
        return cls(DomainKind.INTERVAL, ((a, b),), (n,))

    @classmethod
    def rectangle(cls, bounds: tuple[tuple[float, float], tuple[float, float]], resolution: tuple[int, int]) -> Domain:
        return cls(DomainKind.RECTANGLE, bounds, resolution)

    @classmethod
    def masked(
        cls, bounds: tuple[tuple[float, float], tuple[float, float]], mask: np.ndarray
    ) -> Domain:
        mask = np.asarray(mask, dtype=bool)
        return cls(DomainKind.MASKED_GRID, bounds, mask.shape, mask)

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in self.bounds)

    @property
    def spacing(self) -> tuple[float, ...]:
        if self.kind == DomainKind.MASKED_GRID:
            return tuple(length / n for length, n in zip(self.lengths, self.resolution, strict=True))
        return tuple(length / (n - 1) for length, n in zip(self.lengths, self.resolution, strict=True))

    @property
    def h_min(self) -> float:
        return min(self.spacing)

    def axes(self) -> list[np.ndarray]:
        """Coordinates of the grid points along each axis."""
        out = []
        for (a, _b), n, h in zip(self.bounds, self.resolution, self.spacing, strict=True):
            if self.kind == DomainKind.MASKED_GRID:
                out.append(a + (np.arange(n) + 0.5) * h)
            else:
                out.append(a + np.arange(n) * h)
        return out

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def sample(self, fn: Callable[..., np.ndarray]) -> np.ndarray:
        """Evaluate a coordinate function on the grid (zero outside the mask)."""
        values = np.asarray(fn(*self.mesh()), dtype=float)
        values = np.broadcast_to(values, self.shape).copy()
        if self.mask is not None:
            values[~self.mask] = 0.0
        return values

    def same_grid(self, other: Domain) -> bool:
        if self.kind != other.kind or self.bounds != other.bounds or self.resolution != other.resolution:
            return False
        if self.mask is None:
            return True
        return bool(np.array_equal(self.mask, other.mask))

    def to_meta(self) -> dict:
        return {"kind": self.kind.value, "bounds": [list(b) for b in self.bounds], "resolution": list(self.resolution)}


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Boundary operator kind plus optional grid boundary data g.

    g is a full-grid array; only its boundary-node entries are read. For
    Dirichlet it holds boundary values, for Neumann the outward normal flux.
    """

    kind: BCKind
    g: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BCKind(self.kind))
        if self.kind == BCKind.INHOMOGENEOUS_DIRICHLET and self.g is None:
            raise ValidationError("inhomogeneous-dirichlet requires boundary data g")
        if self.kind == BCKind.HOMOGENEOUS_DIRICHLET and self.g is not None:
            raise ValidationError("homogeneous-dirichlet takes no boundary data")
        if self.g is not None:
            g = np.array(self.g, dtype=float)
            if not np.all(np.isfinite(g)):
                raise ValidationError("boundary data g must be finite")
            g.setflags(write=False)
            object.__setattr__(self, "g", g)

    @classmethod
    def constant(cls, kind: BCKind | str, value: float, domain: Domain) -> BoundaryCondition:
        return cls(BCKind(kind), np.full(domain.shape, float(value)))

    @property
    def is_dirichlet(self) -> bool:
        return self.kind in (BCKind.HOMOGENEOUS_DIRICHLET, BCKind.INHOMOGENEOUS_DIRICHLET)

    @property
    def has_data(self) -> bool:
        return self.g is not None

    @property
    def basis_kind(self) -> BCKind:
        """Homogeneous kind used for the eigenbasis of this condition."""
        return BCKind.HOMOGENEOUS_DIRICHLET if self.is_dirichlet else BCKind.NEUMANN


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """Diffusion coefficient D: a constant, a positive scalar field or an SPD matrix field.

    A matrix field may be given as a single d x d matrix, meaning the same matrix
    at every cell.
    """

    kind: DiffusionKind
    value: float | np.ndarray = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DiffusionKind(self.kind))
        if self.kind == DiffusionKind.CONSTANT:
            value = float(self.value)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"constant diffusion must be positive, got {value}")
            object.__setattr__(self, "value", value)
            return

        value = np.array(self.value, dtype=float)
        if not np.all(np.isfinite(value)):
            raise ValidationError("diffusion field must be finite")
        if self.kind == DiffusionKind.SCALAR_FIELD:
            if np.any(value <= 0):
                raise ValidationError("scalar diffusion field must be strictly positive")
        else:
            if value.ndim < 2 or value.shape[-1] != value.shape[-2]:
                raise ValidationError(f"matrix field must end in square d x d axes, got shape {value.shape}")
            if not np.allclose(value, np.swapaxes(value, -1, -2), rtol=0.0, atol=1e-14):
                raise ValidationError("diffusion matrix field must be symmetric")
            smallest = np.linalg.eigvalsh(value).min()
            if smallest <= 0:
                raise ValidationError(f"diffusion matrix field is not SPD (smallest eigenvalue {smallest:.3e})")
        value.setflags(write=False)
        object.__setattr__(self, "value", value)

    @classmethod
    def constant(cls, value: float = 1.0) -> DiffusionSpec:
        return cls(DiffusionKind.CONSTANT, value)

    @classmethod
    def scalar_field(cls, domain: Domain, fn: Callable[..., np.ndarray]) -> DiffusionSpec:
        values = np.asarray(fn(*domain.mesh()), dtype=float)
        return cls(DiffusionKind.SCALAR_FIELD, np.broadcast_to(values, domain.shape).copy())

    @classmethod
    def matrix(cls, matrix: np.ndarray) -> DiffusionSpec:
        return cls(DiffusionKind.SPD_MATRIX_FIELD, np.asarray(matrix, dtype=float))

    @property
    def is_constant(self) -> bool:
        return self.kind == DiffusionKind.CONSTANT

    def uniform_matrix(self) -> np.ndarray | None:
        """The single matrix of a spatially uniform matrix field, else None."""
        if self.kind != DiffusionKind.SPD_MATRIX_FIELD:
            return None
        value = np.asarray(self.value)
        if value.ndim == 2:
            return value
        flat = value.reshape(-1, *value.shape[-2:])
        if np.all(flat == flat[0]):
            return flat[0]
        return None

    def separable_factors(self, dim: int) -> tuple[float, ...] | None:
        """Per-axis coefficients when D is constant or a uniform diagonal matrix."""
        if self.kind == DiffusionKind.CONSTANT:
            return (float(self.value),) * dim
        matrix = self.uniform_matrix()
        if matrix is None or matrix.shape != (dim, dim):
            return None
        if np.any(matrix[~np.eye(dim, dtype=bool)] != 0.0):
            return None
        return tuple(float(d) for d in np.diag(matrix))

    def scalar_on(self, domain: Domain) -> np.ndarray:
        """Scalar coefficient sampled on the grid (constant or scalar field only)."""
        if self.kind == DiffusionKind.CONSTANT:
            return np.full(domain.shape, float(self.value))
        if self.kind == DiffusionKind.SCALAR_FIELD:
            value = np.asarray(self.value)
            if value.shape != domain.shape:
                raise ValidationError(f"diffusion field shape {value.shape} does not match grid {domain.shape}")
            return value
        raise ValidationError("matrix diffusion has no scalar representation")

    def matrix_on(self, domain: Domain) -> np.ndarray:
        """Full d x d coefficient per grid point, shape (*grid, d, d)."""
        d = domain.dim
        if self.kind != DiffusionKind.SPD_MATRIX_FIELD:
            return self.scalar_on(domain)[..., None, None] * np.eye(d)
        value = np.asarray(self.value)
        if value.shape[-2:] != (d, d):
            raise ValidationError(f"matrix field is {value.shape[-2:]} but domain is {d}D")
        if value.ndim == 2:
            return np.broadcast_to(value, (*domain.shape, d, d))
        if value.shape[:-2] != domain.shape:
            raise ValidationError(f"matrix field grid {value.shape[:-2]} does not match {domain.shape}")
        return value

    def max_coefficient(self) -> float:
        """Largest diffusivity over the field (largest eigenvalue for matrices)."""
        if self.kind == DiffusionKind.CONSTANT:
            return float(self.value)
        if self.kind == DiffusionKind.SCALAR_FIELD:
            return float(np.max(self.value))
        return float(np.linalg.eigvalsh(np.asarray(self.value)).max())

    def to_meta(self) -> dict:
        if self.kind == DiffusionKind.CONSTANT:
            return {"kind": self.kind.value, "value": float(self.value)}
        return {"kind": self.kind.value, "shape": list(np.shape(self.value))}

    def fingerprint(self) -> bytes:
        """Bytes identifying the coefficient, used in basis hashes."""
        return self.kind.value.encode() + np.ascontiguousarray(self.value, dtype="<f8").tobytes()

