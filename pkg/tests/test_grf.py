import numpy as np

from kiro_leno.operator_learning.pde_lab.grf import GRFParams, grf_std, sample_grf, sample_grf_batch, sample_grf_coeffs


def test_default_std_follows_the_power_law():
    lambdas = np.array([0.0, 1.0, 10.0])
    np.testing.assert_allclose(grf_std(lambdas, GRFParams()), 7.0 * (lambdas + 7.0) ** -1.25)
    assert np.all(np.diff(grf_std(np.linspace(0, 100, 20), GRFParams())) < 0)


def test_same_seed_same_samples(dirichlet_basis):
    a = sample_grf_coeffs(dirichlet_basis, 4, seed=11)
    b = sample_grf_coeffs(dirichlet_basis, 4, seed=11)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_grf_coeffs(dirichlet_basis, 4, seed=12))


def test_sample_stream_does_not_depend_on_count(dirichlet_basis):
    few = sample_grf_coeffs(dirichlet_basis, 2, seed=5, variables=2)
    many = sample_grf_coeffs(dirichlet_basis, 6, seed=5, variables=2)
    np.testing.assert_array_equal(few, many[:2])
    assert not np.array_equal(many[:, 0], many[:, 1])


def test_batch_fields_live_on_the_grid(dirichlet_basis):
    fields = sample_grf_batch(dirichlet_basis, 3, seed=0, variables=2)
    assert fields.shape == (3, 2, 33)
    # Dirichlet modes vanish on the boundary
    assert np.all(np.abs(fields[..., [0, -1]]) < 1e-12)


def test_zero_variance_gives_zero_field(dirichlet_basis):
    assert np.all(sample_grf(dirichlet_basis, variance_scale=0.0, seed=3) == 0.0)
