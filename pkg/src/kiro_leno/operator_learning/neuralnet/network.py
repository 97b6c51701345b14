from __future__ import annotations

import numpy as np

from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.neuralnet.autograd import Tensor


def _check_width(net: CoeffNet, width: int) -> None:
    if width != net.input_size:
        raise ValidationError(f"input width {width} does not match network input size {net.input_size}")


def forward(net: CoeffNet, x: np.ndarray) -> np.ndarray:
    """Affine-ReLU-...-affine evaluation of a batch of rows (..., cP)."""
    x = np.asarray(x, dtype=float)
    _check_width(net, x.shape[-1])
    out = x
    for layer in range(net.n_layers):
        out = out @ net.weight(layer) + net.bias(layer)
        if layer < net.n_layers - 1:
            out = np.maximum(out, 0.0)
    return out


def parameter_tensors(net: CoeffNet) -> dict[str, Tensor]:
    """Leaf tensors for every parameter; frozen ones do not collect gradients."""
    return {
        name: Tensor(net.params[name], requires_grad=name not in net.frozen, name=name)
        for name in net.names
    }


def forward_tape(net: CoeffNet, params: dict[str, Tensor], x: Tensor | np.ndarray) -> Tensor:
    """Same arithmetic as forward(), recorded on the tape."""
    x = Tensor.ensure(x)
    _check_width(net, x.shape[-1])
    out = x
    for layer in range(net.n_layers):
        out = out @ params[f"W{layer}"] + params[f"b{layer}"]
        if layer < net.n_layers - 1:
            out = out.relu()
    return out


def backward(loss: Tensor, params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss for every parameter (zeros where nothing flowed)."""
    for tensor in params.values():
        tensor.grad = None
    loss.backward()
    return {
        name: np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad.copy()
        for name, tensor in params.items()
    }


def split_for_transfer(net: CoeffNet) -> CoeffNet:
    """Freeze every layer but the final affine one."""
    if net.n_layers < 2:
        raise ValidationError("transfer needs at least one hidden layer")
    last = net.n_layers - 1
    return net.with_frozen(set(net.names) - {f"W{last}", f"b{last}"})
