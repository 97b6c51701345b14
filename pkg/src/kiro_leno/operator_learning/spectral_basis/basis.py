from __future__ import annotations

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, BoundaryCondition, DiffusionSpec, Domain, DomainKind
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.errors import CapacityError, NumericalError, ValidationError
from kiro_leno.operator_learning.spectral_basis.assembly import assemble_operator
from kiro_leno.operator_learning.spectral_basis.eigensolver import analytic_modes, fix_signs, orthonormalize, solve_modes


def build_basis(
    domain: Domain, bc: BCKind | BoundaryCondition | str, diffusion: DiffusionSpec, P: int
) -> EigenBasis:
    """P smallest eigenpairs of -div(D grad) with the homogeneous version of `bc`.

    Separable constant coefficients on intervals and rectangles use sampled
    sine/cosine modes; everything else goes through the assembled operator.
    """
    if isinstance(bc, BoundaryCondition):
        bc_kind = bc.basis_kind
    else:
        bc_kind = BCKind.NEUMANN if BCKind(bc) == BCKind.NEUMANN else BCKind.HOMOGENEOUS_DIRICHLET
    if P < 1:
        raise ValidationError(f"P must be positive, got {P}")

    op = assemble_operator(domain, bc_kind, diffusion)
    if P > op.n_dof:
        raise CapacityError(f"P={P} exceeds the {op.n_dof} interior degrees of freedom")

    factors = diffusion.separable_factors(domain.dim) if domain.kind != DomainKind.MASKED_GRID else None
    w_full = op.weights.reshape(-1)
    if factors is not None:
        lambdas, modes = analytic_modes(domain, bc_kind, factors, P)
        solver = "analytic"
    else:
        lambdas, phi, solver = solve_modes(op, P)
        modes = np.zeros((P, domain.size))
        modes[:, op.dof] = phi.T

    if lambdas[0] < -1e-8 * max(1.0, float(lambdas[-1])):
        raise NumericalError(f"negative eigenvalue {lambdas[0]:.3e} from the {solver} solver")
    lambdas = np.maximum(lambdas, 0.0)
    modes = fix_signs(orthonormalize(modes, w_full))

    logger.info(
        f"Built {solver} basis: {domain.kind.value} {domain.shape}, {bc_kind.value}, "
        f"P={P}, lambda in [{lambdas[0]:.4g}, {lambdas[-1]:.4g}]"
    )
    return EigenBasis(
        domain=domain,
        bc_kind=bc_kind,
        diffusion=diffusion,
        lambdas=lambdas,
        modes=modes.reshape(P, *domain.shape),
        weights=op.weights,
        solver=solver,
    )


def project(basis: EigenBasis, field: np.ndarray) -> np.ndarray:
    """beta_i = <field, phi_i>_h for a grid function or a batch (..., *grid) -> (..., P)."""
    field = basis.check_field(field)
    lead = field.shape[: field.ndim - basis.domain.dim]
    flat = field.reshape(-1, basis.domain.size) * basis.weights.reshape(-1)
    coeffs = flat @ basis.modes.reshape(basis.P, -1).T
    return coeffs.reshape(*lead, basis.P)


def reconstruct(basis: EigenBasis, coeffs: np.ndarray) -> np.ndarray:
    """sum_i coeffs_i phi_i for (..., P) coefficients -> (..., *grid)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim < 1 or coeffs.shape[-1] != basis.P:
        raise ValidationError(f"expected {basis.P} coefficients, got shape {coeffs.shape}")
    lead = coeffs.shape[:-1]
    fields = coeffs.reshape(-1, basis.P) @ basis.modes.reshape(basis.P, -1)
    return fields.reshape(*lead, *basis.domain.shape)
