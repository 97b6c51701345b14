from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.errors import ValidationError


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """M sampled space-time solutions, shape (M, N+1, c, *grid), recorded at `times`."""

    times: np.ndarray
    samples: np.ndarray
    problem: ProblemSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        samples = np.array(self.samples, dtype=float)
        if times.ndim != 1 or times.size < 1:
            raise ValidationError("times must be a non-empty vector")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("times must be strictly increasing")
        if samples.ndim < 4 or samples.shape[1] != times.size:
            raise ValidationError(f"samples shape {samples.shape} must be (M, {times.size}, c, *grid)")
        if samples.shape[0] < 1:
            raise ValidationError("trajectory set needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("trajectory samples must be finite")
        if self.problem is not None:
            expected = (self.problem.variables, *self.problem.domain.shape)
            if samples.shape[2:] != expected:
                raise ValidationError(f"samples trailing shape {samples.shape[2:]} does not match problem {expected}")
        times.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", samples)

    @property
    def M(self) -> int:
        return int(self.samples.shape[0])

    @property
    def N(self) -> int:
        return int(self.times.size - 1)

    @property
    def variables(self) -> int:
        return int(self.samples.shape[2])

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(self.samples.shape[3:])

    def head(self, n_steps: int) -> TrajectorySet:
        if not 0 <= n_steps <= self.N:
            raise ValidationError(f"cannot keep {n_steps} steps of a {self.N}-step trajectory")
        return TrajectorySet(self.times[: n_steps + 1], self.samples[:, : n_steps + 1], self.problem, self.seed)
