from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.dataset.projection import effective_lambdas
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.domain import DiffusionSpec
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.lift import BoundaryLift
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.rollout import rollout
from kiro_leno.operator_learning.neuralnet.network import forward
from kiro_leno.operator_learning.spectral_basis.basis import project, reconstruct


def bases_for(net: CoeffNet, bases: EigenBasis | list[EigenBasis]) -> list[EigenBasis]:
    if isinstance(bases, EigenBasis):
        if net.input_size % bases.P:
            raise ValidationError(f"network width {net.input_size} is not a multiple of P={bases.P}")
        bases = [bases] * (net.input_size // bases.P)
    if sum(b.P for b in bases) != net.input_size:
        raise ValidationError(f"bases carry {sum(b.P for b in bases)} modes, network expects {net.input_size}")
    return list(bases)


def project_fields(bases: list[EigenBasis], fields: np.ndarray) -> np.ndarray:
    """(..., c, *grid) -> (..., cP), variable-major."""
    fields = np.asarray(fields, dtype=float)
    grid = bases[0].domain.shape
    if len(bases) == 1 and fields.shape[fields.ndim - len(grid) - 1 : fields.ndim - len(grid)] != (1,):
        fields = np.expand_dims(fields, axis=fields.ndim - len(grid))
    axis = fields.ndim - len(grid) - 1
    if axis < 0 or fields.shape[axis] != len(bases):
        raise ValidationError(f"fields shape {fields.shape} does not carry {len(bases)} variables on grid {grid}")
    return np.concatenate([project(b, np.take(fields, v, axis=axis)) for v, b in enumerate(bases)], axis=-1)


def reconstruct_fields(bases: list[EigenBasis], coeffs: np.ndarray) -> np.ndarray:
    """(..., cP) -> (..., c, *grid)."""
    P = bases[0].P
    parts = [reconstruct(b, coeffs[..., v * P : (v + 1) * P]) for v, b in enumerate(bases)]
    return np.stack(parts, axis=coeffs.ndim - 1)


def learned_operator(net: CoeffNet, bases: EigenBasis | list[EigenBasis]) -> Callable[[np.ndarray], np.ndarray]:
    """N(u) = sum_i G_i(beta(u)) phi_i, acting on (..., c, *grid) fields.

    Single-variable fields may drop the variable axis; the output keeps it.
    """
    bases = bases_for(net, bases)

    def operator(u: np.ndarray) -> np.ndarray:
        return reconstruct_fields(bases, forward(net, project_fields(bases, u)))

    return operator


@dataclass(frozen=True, eq=False)
class Prediction:
    """Rolled-out fields with their L2-norm series (and the reference's, if given)."""

    trajectory: TrajectorySet
    betas: np.ndarray  # (H+1, cP)
    norms: np.ndarray  # (H+1,)
    reference_norms: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    def deviation(self, start: int = 0) -> float:
        """Max relative distance between predicted and reference norm curves from step `start` on."""
        if self.reference_norms is None:
            raise ValidationError("prediction has no reference to compare with")
        n = min(self.norms.size, self.reference_norms.size)
        ref = self.reference_norms[start:n]
        return float(np.max(np.abs(self.norms[start:n] - ref) / np.maximum(np.abs(ref), 1e-12)))


def field_norms(bases: list[EigenBasis], fields: np.ndarray) -> np.ndarray:
    """sqrt(sum_v |u_v|^2) over (..., c, *grid)."""
    squares = [bases[v].norm(np.take(fields, v, axis=-len(bases[0].domain.shape) - 1)) ** 2 for v in range(len(bases))]
    return np.sqrt(np.sum(squares, axis=0))


def default_lambdas(bases: list[EigenBasis], diffusion: Sequence[DiffusionSpec] | None) -> np.ndarray:
    """Concatenated per-variable eigenvalues, variable-major."""
    if diffusion is None:
        if len({id(b) for b in bases}) < len(bases):
            raise ValidationError("variables share a basis; pass lambdas or the per-variable diffusion")
        return np.concatenate([b.lambdas for b in bases])
    if len(diffusion) != len(bases):
        raise ValidationError(f"{len(diffusion)} diffusion coefficients for {len(bases)} variables")
    return np.concatenate([effective_lambdas(b, d) for b, d in zip(bases, diffusion, strict=True)])


def predict(
    net: CoeffNet,
    bases: EigenBasis | list[EigenBasis],
    u0: np.ndarray,
    horizon: int,
    dt: float,
    lambdas: np.ndarray | None = None,
    lift: BoundaryLift | np.ndarray | None = None,
    reference: np.ndarray | None = None,
    time_scale: float = 1.0,
    diffusion: Sequence[DiffusionSpec] | None = None,
) -> Prediction:
    """Roll out `horizon` steps of size dt from project(u0) and reconstruct the fields.

    Without explicit lambdas, each variable's eigenvalues come from its basis
    rescaled to that variable's `diffusion`; a basis shared by several
    variables needs one or the other. With a lift, u0 and the returned fields
    are in solution units. reference, shaped (H'+1, c, *grid), is only used
    for its norm series.
    """
    bases = bases_for(net, bases)
    if horizon < 0:
        raise ValidationError("horizon must be non-negative")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    c, grid = len(bases), bases[0].domain.shape
    u0 = np.asarray(u0, dtype=float).reshape(c, *grid)
    offset = None
    if lift is not None:
        offset = lift.u_g if isinstance(lift, BoundaryLift) else np.asarray(lift, dtype=float)
        offset = np.broadcast_to(offset, (c, *grid))
    lambdas = default_lambdas(bases, diffusion) if lambdas is None else np.asarray(lambdas, dtype=float)

    times = dt * np.arange(horizon + 1)
    beta0 = project_fields(bases, u0 if offset is None else u0 - offset)
    state = rollout(net, beta0, times, lambdas, time_scale)
    betas = state.betas[0]
    fields = reconstruct_fields(bases, betas[1:])
    if offset is not None:
        fields = fields + offset
    fields = np.concatenate([u0[None], fields], axis=0)

    reference_norms = None
    if reference is not None:
        reference_norms = field_norms(bases, np.asarray(reference, dtype=float).reshape(-1, c, *grid))
    logger.info(f"Predicted {horizon} steps of dt={dt:g}")
    return Prediction(
        trajectory=TrajectorySet(times=times, samples=fields[None]),
        betas=betas,
        norms=field_norms(bases, fields),
        reference_norms=reference_norms,
    )
