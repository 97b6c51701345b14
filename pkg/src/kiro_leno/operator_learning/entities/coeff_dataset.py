from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kiro_leno.operator_learning.errors import ValidationError


def compute_residuals(
    betas: np.ndarray, times: np.ndarray, lambdas: np.ndarray, time_scale: float = 1.0
) -> np.ndarray:
    """R^n = a (b^n - b^{n-1}) / (t_n - t_{n-1}) + Lambda b^n for n = 1..N.

    betas is (M, N+1, cP); the result is (M, N, cP).
    """
    tau = np.diff(np.asarray(times, dtype=float))
    if np.any(tau <= 0):
        raise ValidationError("time grid must have positive increments")
    diff = (betas[:, 1:] - betas[:, :-1]) / tau[None, :, None]
    return time_scale * diff + np.asarray(lambdas)[None, None, :] * betas[:, 1:]


@dataclass(frozen=True, eq=False)
class CoeffDataset:
    """Projected coefficients and residuals of a trajectory set.

    Coefficients of several variables are concatenated variable-major:
    all P coefficients of variable 0, then variable 1, and so on.
    """

    basis_hash: str
    times: np.ndarray  # (N+1,)
    betas: np.ndarray  # (M, N+1, cP)
    residuals: np.ndarray  # (M, N, cP)
    lambdas: np.ndarray  # (cP,)
    provenance: dict = field(default_factory=dict)
    lift: np.ndarray | None = None  # (c, *grid), subtracted before projection

    def __post_init__(self):
        arrays = {
            "times": np.array(self.times, dtype=float),
            "betas": np.array(self.betas, dtype=float),
            "residuals": np.array(self.residuals, dtype=float),
            "lambdas": np.array(self.lambdas, dtype=float),
        }
        times, betas, residuals, lambdas = arrays.values()
        if betas.ndim != 3 or betas.shape[0] < 1:
            raise ValidationError(f"betas must be (M, N+1, cP) with M >= 1, got {betas.shape}")
        if times.shape != (betas.shape[1],):
            raise ValidationError(f"times length {times.size} does not match betas steps {betas.shape[1]}")
        if residuals.shape != (betas.shape[0], betas.shape[1] - 1, betas.shape[2]):
            raise ValidationError(f"residuals shape {residuals.shape} does not match betas {betas.shape}")
        if lambdas.shape != (betas.shape[2],):
            raise ValidationError(f"lambdas length {lambdas.size} does not match coefficient width {betas.shape[2]}")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("time grid must have positive increments")
        for name, arr in arrays.items():
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.lift is not None:
            lift = np.array(self.lift, dtype=float)
            lift.setflags(write=False)
            object.__setattr__(self, "lift", lift)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def M(self) -> int:
        return int(self.betas.shape[0])

    @property
    def N(self) -> int:
        return int(self.betas.shape[1] - 1)

    @property
    def width(self) -> int:
        return int(self.betas.shape[2])

    @property
    def variables(self) -> int:
        return int(self.provenance.get("variables", 1))

    @property
    def P(self) -> int:
        return self.width // self.variables

    @property
    def tau(self) -> np.ndarray:
        return np.diff(self.times)

    def head(self, n_steps: int) -> CoeffDataset:
        """First n_steps recorded steps (n_steps + 1 states)."""
        if not 1 <= n_steps <= self.N:
            raise ValidationError(f"cannot keep {n_steps} steps of a {self.N}-step dataset")
        return CoeffDataset(
            basis_hash=self.basis_hash,
            times=self.times[: n_steps + 1],
            betas=self.betas[:, : n_steps + 1],
            residuals=self.residuals[:, :n_steps],
            lambdas=self.lambdas,
            provenance=self.provenance,
            lift=self.lift,
        )

    def verify_residuals(self) -> float:
        """Max abs deviation between stored residuals and ones recomputed from betas."""
        recomputed = compute_residuals(self.betas, self.times, self.lambdas)
        return float(np.max(np.abs(recomputed - self.residuals))) if self.N else 0.0
