import numpy as np
import pytest

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.training import LossMode
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.loss import loss, residual_targets
from kiro_leno.operator_learning.neuralnet.network import backward

from helpers import rollout_dataset


def test_generating_network_has_zero_loss(small_net):
    dataset = rollout_dataset(small_net)
    total, l_data, l_res = loss(small_net, dataset).values()
    assert l_data == pytest.approx(0.0, abs=1e-10)
    assert l_res == pytest.approx(0.0, abs=1e-8)
    assert total == pytest.approx(l_data + l_res)


def test_modes_select_terms(small_net):
    dataset = rollout_dataset(CoeffNet.init([6, 12, 6], seed=9))
    combined = loss(small_net, dataset, "combined").values()
    data_only = loss(small_net, dataset, LossMode.DATA_ONLY).values()
    residual_only = loss(small_net, dataset, LossMode.RESIDUAL_ONLY).values()
    assert combined[0] == pytest.approx(combined[1] + combined[2])
    assert data_only[0] == pytest.approx(combined[1])
    assert residual_only[0] == pytest.approx(combined[2])
    # both terms are reported whatever the mode
    assert data_only[2] == pytest.approx(combined[2])
    assert combined[1] > 0 and combined[2] > 0


def test_duplicated_samples_leave_the_mean_unchanged(small_net):
    dataset = rollout_dataset(CoeffNet.init([6, 12, 6], seed=9))
    doubled = CoeffDataset(
        basis_hash=dataset.basis_hash,
        times=dataset.times,
        betas=np.concatenate([dataset.betas, dataset.betas]),
        residuals=np.concatenate([dataset.residuals, dataset.residuals]),
        lambdas=dataset.lambdas,
        provenance=dataset.provenance,
    )
    np.testing.assert_allclose(loss(small_net, doubled).values(), loss(small_net, dataset).values(), rtol=1e-12)


def test_horizon_and_floor_checks(small_net):
    dataset = rollout_dataset(small_net, N=4)
    short = loss(CoeffNet.init([6, 12, 6], seed=1), dataset, horizon=2)
    assert np.isfinite(short.values()).all()
    with pytest.raises(ValidationError):
        loss(small_net, dataset, horizon=5)
    with pytest.raises(ValidationError, match="eps_floor"):
        loss(small_net, dataset, eps_floor=0.0)


def test_residual_targets_with_unit_scales(small_net):
    dataset = rollout_dataset(small_net)
    np.testing.assert_array_equal(residual_targets(dataset).data, dataset.residuals)
    scaled = residual_targets(dataset, time_scale=2.0).data
    diff = np.diff(dataset.betas, axis=1) / dataset.tau[None, :, None]
    np.testing.assert_allclose(scaled, dataset.residuals + diff, rtol=1e-12, atol=1e-12)


def test_gradient_matches_finite_differences(small_net):
    dataset = rollout_dataset(CoeffNet.init([6, 12, 6], seed=9), M=2, N=3)
    terms = loss(small_net, dataset)
    grads = backward(terms.total, terms.params)
    eps = 1e-6
    for name, k in (("W0", 5), ("b0", 3), ("W1", 17), ("b1", 2)):
        shape = small_net.params[name].shape
        flat = small_net.params[name].reshape(-1)
        up, down = flat.copy(), flat.copy()
        up[k] += eps
        down[k] -= eps
        numeric = (
            loss(small_net.with_params({name: up.reshape(shape)}), dataset).values()[0]
            - loss(small_net.with_params({name: down.reshape(shape)}), dataset).values()[0]
        ) / (2 * eps)
        assert grads[name].reshape(-1)[k] == pytest.approx(numeric, rel=1e-5, abs=1e-8)
