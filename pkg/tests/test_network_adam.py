import numpy as np
import pytest

from kiro_leno.operator_learning.entities.coeff_net import AdamSettings, AdamState, CoeffNet
from kiro_leno.operator_learning.errors import NumericalError, ValidationError
from kiro_leno.operator_learning.neuralnet.adam import adam_step, adam_update
from kiro_leno.operator_learning.neuralnet.network import (
    backward,
    forward,
    forward_tape,
    parameter_tensors,
    split_for_transfer,
)


def test_init_is_seeded_he_normal():
    a = CoeffNet.init([64, 256, 64], seed=0)
    b = CoeffNet.init([64, 256, 64], seed=0)
    np.testing.assert_array_equal(a.params["W0"], b.params["W0"])
    assert np.all(a.params["b0"] == 0.0)
    assert np.std(a.params["W0"]) == pytest.approx(np.sqrt(2 / 64), rel=0.05)
    assert a.parameter_count() == 64 * 256 + 256 + 256 * 64 + 64


def test_parameters_are_validated():
    with pytest.raises(ValidationError):
        CoeffNet((2,), {})
    with pytest.raises(ValidationError, match="incompatible"):
        CoeffNet((2, 3), {"W0": np.zeros((3, 2)), "b0": np.zeros(3)})
    with pytest.raises(ValidationError, match="finite"):
        CoeffNet((2, 3), {"W0": np.full((2, 3), np.nan), "b0": np.zeros(3)})
    with pytest.raises(ValidationError, match="unknown"):
        CoeffNet.init([2, 3], 0).with_frozen({"W7"})


def test_forward_matches_the_tape(small_net):
    x = np.random.default_rng(0).normal(size=(5, 6))
    taped = forward_tape(small_net, parameter_tensors(small_net), x)
    np.testing.assert_allclose(taped.data, forward(small_net, x), rtol=1e-14)
    with pytest.raises(ValidationError, match="width"):
        forward(small_net, np.zeros((2, 5)))


def test_parameter_gradient_matches_finite_differences(small_net):
    x = np.random.default_rng(1).normal(size=(4, 6))

    def value(net):
        return float(np.sum(forward(net, x) ** 2))

    params = parameter_tensors(small_net)
    out = forward_tape(small_net, params, x)
    grads = backward((out * out).sum(), params)
    eps = 1e-6
    for name in ("W0", "b1"):
        flat = small_net.params[name].reshape(-1)
        for k in (0, flat.size // 2, flat.size - 1):
            up, down = flat.copy(), flat.copy()
            up[k] += eps
            down[k] -= eps
            shape = small_net.params[name].shape
            numeric = (
                value(small_net.with_params({name: up.reshape(shape)}))
                - value(small_net.with_params({name: down.reshape(shape)}))
            ) / (2 * eps)
            assert grads[name].reshape(-1)[k] == pytest.approx(numeric, rel=1e-5, abs=1e-7)


def test_frozen_parameters_get_zero_gradients(small_net):
    net = small_net.with_frozen({"W0", "b0"})
    params = parameter_tensors(net)
    grads = backward(forward_tape(net, params, np.ones((2, 6))).sum(), params)
    assert np.all(grads["W0"] == 0.0)
    assert np.any(grads["W1"] != 0.0)


def test_split_for_transfer():
    net = split_for_transfer(CoeffNet.init([64, 1000, 64], seed=0))
    assert net.trainable == ["W1", "b1"]
    assert net.parameter_count(trainable_only=True) == 64064
    with pytest.raises(ValidationError, match="hidden layer"):
        split_for_transfer(CoeffNet.init([4, 4], seed=0))


def test_adam_first_step():
    settings = AdamSettings(lr=0.1)
    state = AdamState(settings)
    params = {"w": np.array([1.0, -2.0, 0.5])}
    grads = {"w": np.array([0.5, -4.0, 0.0])}
    updated, state = adam_update(state, params, grads, lr=0.1)
    expected = params["w"] - 0.1 * grads["w"] / (np.abs(grads["w"]) + 1e-8)
    np.testing.assert_allclose(updated["w"], expected, rtol=1e-12)
    assert updated["w"][2] == 0.5
    assert state.step == 1


def test_adam_rejects_non_finite_gradients():
    state = AdamState(AdamSettings())
    with pytest.raises(NumericalError, match="non-finite"):
        adam_update(state, {"w": np.zeros(2)}, {"w": np.array([1.0, np.inf])}, lr=0.1)


def test_learning_rate_schedule():
    settings = AdamSettings()
    assert settings.lr_at(0) == 1e-3
    assert settings.lr_at(999) == 1e-3
    assert settings.lr_at(1000) == pytest.approx(2.5e-4)
    assert settings.lr_at(2500) == pytest.approx(6.25e-5)


def test_adam_step_leaves_frozen_parameters_untouched(small_net):
    net = small_net.with_frozen({"W0", "b0"})
    grads = {name: np.ones_like(net.params[name]) for name in net.names}
    state = AdamState.for_net(net, AdamSettings(lr=0.01))
    stepped, state = adam_step(net, grads, state, epoch=0)
    np.testing.assert_array_equal(stepped.params["W0"], net.params["W0"])
    np.testing.assert_allclose(stepped.params["W1"], net.params["W1"] - 0.01, atol=1e-9)
    assert stepped.frozen == net.frozen
