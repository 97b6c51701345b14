from __future__ import annotations

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset, compute_residuals
from kiro_leno.operator_learning.entities.domain import DiffusionSpec
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.lift import BoundaryLift
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.lifting import shift
from kiro_leno.operator_learning.spectral_basis.basis import project


def effective_lambdas(basis: EigenBasis, diffusion: DiffusionSpec | None) -> np.ndarray:
    """Diagonal of D Lambda_P for a variable with the given diffusion.

    A constant D reuses a constant-coefficient basis by rescaling; any other
    coefficient must be the one the basis was built for (its generalized
    eigenvalues already include D).
    """
    if diffusion is None:
        return basis.lambdas.copy()
    if diffusion.is_constant and basis.diffusion.is_constant:
        return basis.lambdas * (float(diffusion.value) / float(basis.diffusion.value))
    if diffusion.fingerprint() == basis.diffusion.fingerprint():
        return basis.lambdas.copy()
    raise ValidationError(
        f"{diffusion.kind.value} diffusion needs a basis built for that coefficient, got a {basis.diffusion.kind.value} basis"
    )


def combined_hash(bases: list[EigenBasis]) -> str:
    hashes = list(dict.fromkeys(b.hash for b in bases))
    return "+".join(hashes)


def project_trajectories(
    traj: TrajectorySet,
    bases: EigenBasis | list[EigenBasis],
    lift: BoundaryLift | None = None,
) -> CoeffDataset:
    """Coefficients beta^n and residuals R^n of every sample, variable-major.

    When `lift` is given the trajectories are shifted by u_g before projection
    and the lift is kept with the dataset.
    """
    c = traj.variables
    bases = list(bases) if isinstance(bases, list | tuple) else [bases] * c
    if len(bases) != c:
        raise ValidationError(f"need one basis per variable ({c}), got {len(bases)}")
    if len({b.P for b in bases}) != 1:
        raise ValidationError("all variables must use the same number of modes")
    problem = traj.problem
    for basis in bases:
        if basis.domain.shape != traj.grid_shape:
            raise ValidationError(f"basis grid {basis.domain.shape} does not match trajectory grid {traj.grid_shape}")
        if problem is not None:
            if not basis.domain.same_grid(problem.domain):
                raise ValidationError("basis domain does not match the trajectory domain")
            if basis.bc_kind != problem.bc.basis_kind:
                raise ValidationError(f"basis boundary {basis.bc_kind.value} does not match {problem.bc.kind.value}")

    samples = traj.samples if lift is None else shift(traj.samples, lift)
    betas = np.concatenate([project(bases[v], samples[:, :, v]) for v in range(c)], axis=-1)
    lambdas = np.concatenate(
        [effective_lambdas(bases[v], problem.diffusion[v] if problem else None) for v in range(c)]
    )
    residuals = compute_residuals(betas, traj.times, lambdas)

    provenance = {
        "problem": problem.name if problem else None,
        "seed": traj.seed,
        "resolution": list(traj.grid_shape),
        "variables": c,
        "P": bases[0].P,
        "bc": bases[0].bc_kind.value,
        "lifted": lift is not None,
    }
    logger.info(f"Projected {traj.M} trajectories x {traj.N} steps onto {c}x{bases[0].P} coefficients")
    return CoeffDataset(
        basis_hash=combined_hash(bases),
        times=traj.times,
        betas=betas,
        residuals=residuals,
        lambdas=lambdas,
        provenance=provenance,
        lift=None if lift is None else lift.u_g[None].repeat(c, axis=0),
    )
