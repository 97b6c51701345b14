import math

import numpy as np
import pytest

from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.transfer import TransferConfig
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.loss import loss
from kiro_leno.operator_learning.neuralnet.autograd import Tensor
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.reporting.renderer import read_rows_csv
from kiro_leno.operator_learning.transfer import (
    accuracy_table,
    synthetic_patients,
    transfer_accuracy,
    transfer_train,
    write_accuracy_csv,
)

from helpers import rollout_dataset


@pytest.fixture
def subject():
    return rollout_dataset(CoeffNet.init([6, 12, 6], seed=9), M=2, N=3)


def test_zero_epochs_keeps_the_initial_scales(small_net, subject):
    result = transfer_train(small_net, subject, TransferConfig(epochs=0, alpha_init=1.5))
    assert result.history == []
    assert result.alpha == pytest.approx(1.5)
    assert result.diffusion == pytest.approx(1.0)
    assert result.net.trainable == ["W1", "b1"]


def test_only_the_output_layer_moves(small_net, subject):
    result = transfer_train(small_net, subject, TransferConfig(epochs=3, lr=1e-2))
    np.testing.assert_array_equal(result.net.params["W0"], small_net.params["W0"])
    np.testing.assert_array_equal(result.net.params["b0"], small_net.params["b0"])
    assert not np.array_equal(result.net.params["W1"], small_net.params["W1"])
    assert len(result.scales) == 3
    assert result.scales[0] == pytest.approx((1.0, 1.0))
    assert result.alpha != 1.0
    assert result.diffusion == 1.0


def test_unit_scale_matches_the_plain_loss(small_net, subject):
    result = transfer_train(small_net, subject, TransferConfig(epochs=1, train_alpha=False))
    assert result.history[0].loss == pytest.approx(loss(small_net, subject).values()[0], rel=1e-10)
    assert result.alpha == 1.0


def test_log_alpha_gradient(small_net, subject):
    log_alpha = math.log(1.3)
    leaf = Tensor(np.array(log_alpha), requires_grad=True)
    loss(small_net, subject, time_scale=leaf.exp()).total.backward()
    eps = 1e-6
    numeric = (
        loss(small_net, subject, time_scale=math.exp(log_alpha + eps)).values()[0]
        - loss(small_net, subject, time_scale=math.exp(log_alpha - eps)).values()[0]
    ) / (2 * eps)
    assert float(leaf.grad) == pytest.approx(numeric, rel=1e-5, abs=1e-9)


def test_diffusion_scale_can_be_trained(small_net, subject):
    config = TransferConfig(epochs=2, train_alpha=False, train_diffusion=True, scale_lr=0.05)
    result = transfer_train(small_net, subject, config)
    assert result.alpha == 1.0
    assert result.diffusion != 1.0


def test_basis_and_width_checks(small_net, subject):
    with pytest.raises(ValidationError, match="differs"):
        transfer_train(small_net, subject, TransferConfig(epochs=1), basis_hash="0x1111111111111111")
    with pytest.raises(ValidationError, match="width"):
        transfer_train(CoeffNet.init([4, 8, 4], seed=0), subject, TransferConfig(epochs=1))


def test_synthetic_patients_stretch_time(heat_problem):
    base = generate_trajectories(heat_problem, M=2, seed=0)
    stretched = synthetic_patients(heat_problem, M=2, seed=0, alpha=2.0)
    np.testing.assert_allclose(stretched.times, 2.0 * base.times)
    np.testing.assert_array_equal(stretched.samples, base.samples)
    with pytest.raises(ValidationError):
        synthetic_patients(heat_problem, M=1, seed=0, alpha=0.0)


def test_accuracy_report(tmp_path, small_net, subject, dirichlet_basis):
    width8 = rollout_dataset(CoeffNet.init([8, 12, 8], seed=9), M=2, N=3)
    result = transfer_train(CoeffNet.init([8, 12, 8], seed=1), width8, TransferConfig(epochs=2))
    accuracy = transfer_accuracy(result, width8, dirichlet_basis)
    assert set(accuracy) == {"1-L^D", "1-E_L2", "1-E_Res", "alpha", "D"}
    assert accuracy["1-L^D"] <= 1.0
    table = accuracy_table({"s0": accuracy})
    assert "1-L^D" in table and "s0" in table and "%" in table
    rows = read_rows_csv(write_accuracy_csv({"s0": accuracy}, tmp_path / "acc.csv"))
    assert rows[0]["subject"] == "s0"
    assert float(rows[0]["alpha"]) == pytest.approx(result.alpha)
