import numpy as np
import pytest

from kiro_leno.operator_learning.dataset.projection import effective_lambdas, project_trajectories
from kiro_leno.operator_learning.entities.coeff_dataset import compute_residuals
from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionSpec, Domain
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.lifting import harmonic_extend
from kiro_leno.operator_learning.pde_lab.catalog import builtin_problem
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.spectral_basis.basis import build_basis, project, reconstruct


def test_coefficients_of_reconstructed_fields(dirichlet_basis):
    coeffs = np.random.default_rng(1).normal(size=(2, 3, 8))
    times = np.array([0.0, 0.01, 0.03])
    traj = TrajectorySet(times, reconstruct(dirichlet_basis, coeffs)[:, :, None])
    dataset = project_trajectories(traj, dirichlet_basis)
    np.testing.assert_allclose(dataset.betas, coeffs, atol=1e-12)
    np.testing.assert_allclose(dataset.residuals, compute_residuals(dataset.betas, times, dirichlet_basis.lambdas))
    np.testing.assert_allclose(dataset.tau, [0.01, 0.02])
    assert dataset.basis_hash == dirichlet_basis.hash
    assert dataset.variables == 1 and dataset.P == 8
    assert dataset.verify_residuals() == 0.0


def test_grid_mismatch(dirichlet_basis):
    traj = TrajectorySet(np.array([0.0, 1.0]), np.zeros((1, 2, 1, 17)))
    with pytest.raises(ValidationError, match="does not match"):
        project_trajectories(traj, dirichlet_basis)


def test_boundary_kind_mismatch(dirichlet_basis):
    problem = builtin_problem("kpp", {"resolution": 33, "bc": "neumann", "record_dt": 1e-4})
    traj = generate_trajectories(problem, M=1, seed=0, n_records=1)
    with pytest.raises(ValidationError, match="boundary"):
        project_trajectories(traj, dirichlet_basis)


def test_effective_lambdas(interval, dirichlet_basis):
    np.testing.assert_allclose(effective_lambdas(dirichlet_basis, None), dirichlet_basis.lambdas)
    np.testing.assert_allclose(
        effective_lambdas(dirichlet_basis, DiffusionSpec.constant(0.5)), 0.5 * dirichlet_basis.lambdas
    )
    field = DiffusionSpec.scalar_field(interval, lambda x: 1.0 + x)
    with pytest.raises(ValidationError):
        effective_lambdas(dirichlet_basis, field)
    own = build_basis(interval, BCKind.HOMOGENEOUS_DIRICHLET, field, 4)
    np.testing.assert_allclose(effective_lambdas(own, field), own.lambdas)


def test_lifted_projection():
    problem = builtin_problem("kpp-inhomogeneous", {"resolution": 33, "record_dt": 1e-4})
    traj = generate_trajectories(problem, M=2, seed=0, n_records=2)
    basis = build_basis(problem.domain, problem.bc, problem.diffusion[0], 8)
    lift = harmonic_extend(problem.domain, problem.bc)
    dataset = project_trajectories(traj, basis, lift)
    assert dataset.provenance["lifted"] is True
    assert dataset.lift.shape == (1, 33)
    np.testing.assert_allclose(dataset.betas, project(basis, traj.samples[:, :, 0] - lift.u_g), atol=1e-12)


def test_two_variables_share_a_rescaled_basis():
    problem = builtin_problem("gray-scott", {"resolution": 16})
    traj = generate_trajectories(problem, M=2, seed=0, n_records=2)
    basis = build_basis(problem.domain, BCKind.NEUMANN, DiffusionSpec.constant(1.0), 4)
    dataset = project_trajectories(traj, basis)
    assert dataset.width == 8 and dataset.variables == 2 and dataset.P == 4
    np.testing.assert_allclose(dataset.lambdas[:4], 2.5e-4 * basis.lambdas)
    np.testing.assert_allclose(dataset.lambdas[4:], 5.0e-4 * basis.lambdas)
    np.testing.assert_allclose(dataset.betas[:, :, 4:], project(basis, traj.samples[:, :, 1]))
    assert dataset.basis_hash == basis.hash


def test_bases_must_agree_on_P():
    domain = Domain.interval(0.0, 1.0, 17)
    a = build_basis(domain, BCKind.NEUMANN, DiffusionSpec.constant(), 3)
    b = build_basis(domain, BCKind.NEUMANN, DiffusionSpec.constant(), 4)
    traj = TrajectorySet(np.array([0.0, 1.0]), np.zeros((1, 2, 2, 17)))
    with pytest.raises(ValidationError, match="same number of modes"):
        project_trajectories(traj, [a, b])
