"""
Homogenisation of boundary data by discrete harmonic extension.

With static data g the lifted unknown w = u - u_g satisfies homogeneous
boundary conditions and w_t - D lap w = F(w + u_g), because the discrete
Laplacian of u_g vanishes on the degrees of freedom.
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, BoundaryCondition, DiffusionSpec, Domain, DomainKind
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.lift import BoundaryLift
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.errors import CompatibilityError, ValidationError
from kiro_leno.operator_learning.pde_lab.reactions import evaluate_reaction
from kiro_leno.operator_learning.spectral_basis.assembly import assemble_operator
from kiro_leno.operator_learning.spectral_basis.basis import project

COMPATIBILITY_TOL = 1e-10


def harmonic_extend(domain: Domain, bc: BoundaryCondition, diffusion: DiffusionSpec | None = None) -> BoundaryLift:
    """Solve the discrete Laplace problem with the boundary data of `bc`.

    Dirichlet: K_II u_I = -K_IB g_B with u_B = g_B.
    Neumann: K u = b (b = flux times boundary measure) with a zero weighted mean.
    """
    if domain.kind == DomainKind.MASKED_GRID:
        raise ValidationError("boundary lifting is only available on intervals and rectangles")
    if bc.g is None:
        raise ValidationError(f"{bc.kind.value} boundary condition carries no data to lift")
    if bc.g.shape != domain.shape:
        raise ValidationError(f"boundary data shape {bc.g.shape} does not match grid {domain.shape}")
    diffusion = diffusion or DiffusionSpec.constant(1.0)
    g = bc.g.reshape(-1)

    if bc.is_dirichlet:
        op = assemble_operator(domain, BCKind.HOMOGENEOUS_DIRICHLET, diffusion)
        K = op.stiffness
        interior, boundary = op.dof, op.boundary
        rhs = -(K[interior][:, boundary] @ g[boundary])
        u = np.zeros(domain.size)
        u[boundary] = g[boundary]
        u[interior] = spla.spsolve(op.stiffness_dof.tocsc(), rhs)
    else:
        op = assemble_operator(domain, BCKind.NEUMANN, diffusion)
        b = op.flux_vector(bc.g)
        net_flux = float(np.sum(b))
        if abs(net_flux) > COMPATIBILITY_TOL:
            raise CompatibilityError(
                f"Neumann data is incompatible: boundary integral of g is {net_flux:.3e}, must vanish within {COMPATIBILITY_TOL}"
            )
        w = op.weights.reshape(-1)
        augmented = sp.bmat([[op.stiffness, sp.csr_matrix(w[:, None])], [sp.csr_matrix(w[None, :]), None]]).tocsc()
        solution = spla.spsolve(augmented, np.concatenate([b, [0.0]]))
        u = solution[:-1]
        u = u - np.sum(w * u) / np.sum(w)

    logger.debug(f"Harmonic extension ({bc.kind.value}) on {domain.shape}: range [{u.min():.4g}, {u.max():.4g}]")
    return BoundaryLift(u_g=u.reshape(domain.shape), g=bc.g, bc_kind=bc.kind)


def _check(u: np.ndarray, lift: BoundaryLift) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    grid = lift.shape
    if u.ndim < len(grid) or u.shape[u.ndim - len(grid):] != grid:
        raise ValidationError(f"field shape {u.shape} does not end in lift grid {grid}")
    return u


def shift(u: np.ndarray, lift: BoundaryLift) -> np.ndarray:
    """w = u - u_g, broadcast over leading (sample, step, variable) axes."""
    return _check(u, lift) - lift.u_g


def unshift(w: np.ndarray, lift: BoundaryLift) -> np.ndarray:
    return _check(w, lift) + lift.u_g


def lift_coefficients(basis: EigenBasis, lift: BoundaryLift) -> np.ndarray:
    return project(basis, lift.u_g)


def residual_offset(basis: EigenBasis, lift: BoundaryLift, lambdas: np.ndarray | None = None) -> np.ndarray:
    """Lambda beta(u_g): the amount by which residuals of u exceed those of w."""
    lambdas = basis.lambdas if lambdas is None else np.asarray(lambdas)
    return lambdas * lift_coefficients(basis, lift)


def shifted_reaction(problem: ProblemSpec, lift: BoundaryLift) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form reaction acting on lifted fields: w -> F(w + u_g)."""

    def reaction(w: np.ndarray) -> np.ndarray:
        return evaluate_reaction(problem, unshift(w, lift))

    return reaction
