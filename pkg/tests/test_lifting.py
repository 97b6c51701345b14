import numpy as np
import pytest

from kiro_leno.operator_learning.entities.domain import BCKind, BoundaryCondition, DiffusionSpec, Domain
from kiro_leno.operator_learning.errors import CompatibilityError, ValidationError
from kiro_leno.operator_learning.lifting import (
    harmonic_extend,
    lift_coefficients,
    residual_offset,
    shift,
    shifted_reaction,
    unshift,
)
from kiro_leno.operator_learning.pde_lab.catalog import builtin_problem
from kiro_leno.operator_learning.pde_lab.reactions import evaluate_reaction
from kiro_leno.operator_learning.spectral_basis.assembly import assemble_operator
from kiro_leno.operator_learning.spectral_basis.masks import masked_domain


def test_constant_dirichlet_data_lifts_to_a_constant(interval):
    lift = harmonic_extend(interval, BoundaryCondition.constant("inhomogeneous-dirichlet", 1.0, interval))
    np.testing.assert_allclose(lift.u_g, 1.0, atol=1e-12)


def test_linear_data_is_its_own_extension():
    domain = Domain.rectangle(((0.0, 1.0), (0.0, 1.0)), (9, 9))
    g = domain.sample(lambda x, y: x + 2 * y)
    lift = harmonic_extend(domain, BoundaryCondition(BCKind.INHOMOGENEOUS_DIRICHLET, g))
    np.testing.assert_allclose(lift.u_g, g, atol=1e-10)


def test_variable_diffusion_extension_is_discrete_harmonic(interval):
    diffusion = DiffusionSpec.scalar_field(interval, lambda x: 2.0 + np.cos(np.pi * x))
    g = np.zeros(interval.shape)
    g[0], g[-1] = 1.0, 3.0
    lift = harmonic_extend(interval, BoundaryCondition(BCKind.INHOMOGENEOUS_DIRICHLET, g), diffusion)
    op = assemble_operator(interval, BCKind.HOMOGENEOUS_DIRICHLET, diffusion)
    np.testing.assert_allclose(op.apply(lift.u_g[None])[0], 0.0, atol=1e-9)
    assert lift.u_g[0] == 1.0 and lift.u_g[-1] == 3.0


def test_incompatible_neumann_flux(interval):
    with pytest.raises(CompatibilityError, match="incompatible"):
        harmonic_extend(interval, BoundaryCondition.constant("neumann", 1.0, interval))


def test_compatible_neumann_flux_has_zero_mean(interval):
    g = np.zeros(interval.shape)
    g[0], g[-1] = 1.0, -1.0
    lift = harmonic_extend(interval, BoundaryCondition(BCKind.NEUMANN, g))
    op = assemble_operator(interval, BCKind.NEUMANN, DiffusionSpec.constant())
    assert np.sum(op.weights * lift.u_g) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(op.stiffness @ lift.u_g.reshape(-1), op.flux_vector(g), atol=1e-9)


def test_lifting_needs_data_and_a_tensor_grid(interval):
    with pytest.raises(ValidationError, match="no data"):
        harmonic_extend(interval, BoundaryCondition(BCKind.NEUMANN))
    disk = masked_domain("disk", 12)
    with pytest.raises(ValidationError, match="intervals and rectangles"):
        harmonic_extend(disk, BoundaryCondition.constant("neumann", 0.0, disk))


def test_shift_round_trip_and_broadcast(interval):
    lift = harmonic_extend(interval, BoundaryCondition.constant("inhomogeneous-dirichlet", 1.0, interval))
    u = np.random.default_rng(0).normal(size=(2, 3, 1, 33))
    w = shift(u, lift)
    assert w.shape == u.shape
    np.testing.assert_allclose(unshift(w, lift), u, atol=1e-15)
    with pytest.raises(ValidationError):
        shift(np.zeros(10), lift)


def test_residual_offset_and_shifted_reaction(dirichlet_basis):
    problem = builtin_problem("kpp-inhomogeneous", {"resolution": 33})
    lift = harmonic_extend(problem.domain, problem.bc)
    coeffs = lift_coefficients(dirichlet_basis, lift)
    np.testing.assert_allclose(residual_offset(dirichlet_basis, lift), dirichlet_basis.lambdas * coeffs)
    w = np.zeros((1, 33))
    np.testing.assert_allclose(shifted_reaction(problem, lift)(w), evaluate_reaction(problem, lift.u_g[None]))
