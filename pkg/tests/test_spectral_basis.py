import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kiro_leno.operator_learning.entities.domain import BCKind, DiffusionKind, DiffusionSpec, Domain
from kiro_leno.operator_learning.errors import CapacityError, ValidationError
from kiro_leno.operator_learning.metrics import fit_order
from kiro_leno.operator_learning.spectral_basis.assembly import assemble_operator, boundary_measure
from kiro_leno.operator_learning.spectral_basis.basis import build_basis, project, reconstruct
from kiro_leno.operator_learning.spectral_basis import eigensolver
from kiro_leno.operator_learning.spectral_basis.eigensolver import fix_signs, rayleigh_residuals
from kiro_leno.operator_learning.spectral_basis.masks import masked_domain


def test_dirichlet_interval_eigenvalues_match_the_stencil(dirichlet_basis):
    h = 1.0 / 32
    k = np.arange(1, 9)
    expected = 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2
    assert dirichlet_basis.solver == "analytic"
    np.testing.assert_allclose(dirichlet_basis.lambdas, expected, rtol=1e-12)


def test_basis_is_orthonormal(dirichlet_basis):
    np.testing.assert_allclose(dirichlet_basis.gram(), np.eye(8), atol=1e-10)


def test_dense_solver_agrees_with_analytic_modes(interval, dirichlet_basis):
    flat = DiffusionSpec(DiffusionKind.SCALAR_FIELD, np.ones(interval.shape))
    dense = build_basis(interval, BCKind.HOMOGENEOUS_DIRICHLET, flat, 8)
    assert dense.solver == "dense"
    np.testing.assert_allclose(dense.lambdas, dirichlet_basis.lambdas, rtol=1e-9)
    # same sign convention, so the modes agree up to round-off
    np.testing.assert_allclose(dense.modes, dirichlet_basis.modes, atol=1e-8)


def test_constant_diffusion_scales_eigenvalues(interval, dirichlet_basis):
    scaled = build_basis(interval, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant(3.0), 8)
    np.testing.assert_allclose(scaled.lambdas, 3.0 * dirichlet_basis.lambdas, rtol=1e-12)


def test_neumann_basis_starts_with_the_constant_mode(interval):
    basis = build_basis(interval, BCKind.NEUMANN, DiffusionSpec.constant(1.0), 5)
    assert basis.lambdas[0] == pytest.approx(0.0, abs=1e-12)
    assert np.ptp(basis.modes[0]) == pytest.approx(0.0, abs=1e-12)
    assert basis.modes[0, 0] > 0


def test_dirichlet_modes_vanish_on_the_boundary(dirichlet_basis):
    assert np.all(dirichlet_basis.modes[:, 0] == 0.0)
    assert np.all(np.abs(dirichlet_basis.modes[:, -1]) < 1e-12)


def test_rectangle_eigenvalues_are_sorted_sums():
    domain = Domain.rectangle(((0.0, 1.0), (0.0, 2.0)), (17, 17))
    basis = build_basis(domain, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant(1.0), 10)
    assert np.all(np.diff(basis.lambdas) >= 0)
    np.testing.assert_allclose(basis.gram(), np.eye(10), atol=1e-10)


def test_anisotropic_matrix_matches_separable_sum():
    domain = Domain.rectangle(((0.0, 1.0), (0.0, 1.0)), (17, 17))
    iso = build_basis(domain, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.matrix(np.diag([1.0, 1.0])), 6)
    const = build_basis(domain, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant(1.0), 6)
    np.testing.assert_allclose(iso.lambdas, const.lambdas, rtol=1e-12)


def test_masked_domain_basis():
    domain = masked_domain("disk", 16)
    basis = build_basis(domain, BCKind.NEUMANN, DiffusionSpec.constant(1.0), 5)
    assert basis.solver == "dense"
    assert basis.lambdas[0] == pytest.approx(0.0, abs=1e-8)
    assert np.all(np.diff(basis.lambdas) >= -1e-10)
    np.testing.assert_allclose(basis.gram(), np.eye(5), atol=1e-10)
    assert np.all(basis.modes[:, ~domain.mask] == 0.0)


def test_too_many_modes_is_a_capacity_error():
    domain = Domain.interval(0.0, 1.0, 8)
    assert assemble_operator(domain, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant()).n_dof == 6
    with pytest.raises(CapacityError):
        build_basis(domain, BCKind.HOMOGENEOUS_DIRICHLET, DiffusionSpec.constant(), 7)


def test_projection_of_a_mode_is_a_unit_vector(dirichlet_basis):
    coeffs = project(dirichlet_basis, dirichlet_basis.modes[2])
    np.testing.assert_allclose(coeffs, np.eye(8)[2], atol=1e-12)


def test_projection_rejects_wrong_grid(dirichlet_basis):
    with pytest.raises(ValidationError):
        project(dirichlet_basis, np.zeros(10))
    with pytest.raises(ValidationError):
        reconstruct(dirichlet_basis, np.zeros(5))


_SMALL_BASIS = build_basis(Domain.interval(0.0, 1.0, 17), BCKind.NEUMANN, DiffusionSpec.constant(), 6)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (3, 6), elements=st.floats(-10, 10, allow_nan=False)))
def test_projection_inverts_reconstruction(coeffs):
    np.testing.assert_allclose(project(_SMALL_BASIS, reconstruct(_SMALL_BASIS, coeffs)), coeffs, atol=1e-9)


def test_first_eigenvalue_converges_at_second_order():
    sizes = [17, 33, 65, 129]
    hs = [1.0 / (n - 1) for n in sizes]
    errs = [
        abs(build_basis(Domain.interval(0, 1, n), "homogeneous-dirichlet", DiffusionSpec.constant(), 1).lambdas[0] - np.pi**2)
        for n in sizes
    ]
    slope, r2 = fit_order(hs, errs)
    assert slope >= 1.9
    assert r2 > 0.999


def test_fix_signs_makes_first_significant_entry_positive():
    modes = np.array([[1e-9, -2.0, 1.0], [0.0, 0.0, -3.0]])
    fixed = fix_signs(modes)
    assert fixed[0, 1] == 2.0
    assert fixed[1, 2] == 3.0


def test_boundary_measure_adds_up_to_the_perimeter(interval):
    ends = boundary_measure(interval)
    assert ends[0] == ends[-1] == 1.0
    assert ends[1:-1].sum() == 0.0
    measure = boundary_measure(Domain.rectangle(((0.0, 2.0), (0.0, 1.0)), (9, 5)))
    assert measure.sum() == pytest.approx(6.0)
    assert measure[4, 2] == 0.0


_FINE_SQUARE = Domain.rectangle(((0.0, 1.0), (0.0, 1.0)), (70, 70))
_GRADED = DiffusionSpec.scalar_field(_FINE_SQUARE, lambda x, y: 1.0 + 0.5 * x + 0.25 * y**2)


@pytest.mark.parametrize("bc_kind", [BCKind.HOMOGENEOUS_DIRICHLET, BCKind.NEUMANN])
def test_lanczos_modes_on_a_large_variable_coefficient_grid(bc_kind, monkeypatch):
    op = assemble_operator(_FINE_SQUARE, bc_kind, _GRADED)
    assert op.n_dof > eigensolver.DENSE_DOF_LIMIT

    basis = build_basis(_FINE_SQUARE, bc_kind, _GRADED, 12)
    assert basis.solver == "lanczos"
    assert np.all(np.diff(basis.lambdas) >= 0)
    flat = basis.modes.reshape(12, -1)
    residuals = rayleigh_residuals(op, basis.lambdas, flat[:, op.dof].T)
    assert residuals.max() <= 1e-8
    np.testing.assert_allclose(basis.gram(), np.eye(12), atol=1e-10)

    monkeypatch.setattr(eigensolver, "DENSE_DOF_LIMIT", op.n_dof)
    dense = build_basis(_FINE_SQUARE, bc_kind, _GRADED, 12)
    assert dense.solver == "dense"
    np.testing.assert_allclose(basis.lambdas, dense.lambdas, rtol=1e-9, atol=1e-9)
    # same span: the cross Gram matrix is orthogonal even if close pairs rotate
    cross = (flat * op.weights.reshape(-1)) @ dense.modes.reshape(12, -1).T
    np.testing.assert_allclose(cross @ cross.T, np.eye(12), atol=1e-6)
