from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.training import LossMode
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.leno.rollout import rollout_tape
from kiro_leno.operator_learning.neuralnet.autograd import Tensor, stack
from kiro_leno.operator_learning.neuralnet.network import forward_tape, parameter_tensors

EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class LossTerms:
    """Total loss and its data / residual parts, all scalar tensors."""

    total: Tensor
    data: Tensor
    residual: Tensor
    params: dict[str, Tensor]

    def values(self) -> tuple[float, float, float]:
        return float(self.total.data), float(self.data.data), float(self.residual.data)


def _is_unit(scale: Tensor | float) -> bool:
    return not isinstance(scale, Tensor) and float(scale) == 1.0


def residual_targets(
    dataset: CoeffDataset, time_scale: Tensor | float = 1.0, diffusion_scale: Tensor | float = 1.0
) -> Tensor:
    """alpha (beta^n - beta^{n-1}) / tau_n + D Lambda beta^n, shape (M, N, cP)."""
    if _is_unit(time_scale) and _is_unit(diffusion_scale):
        return Tensor(dataset.residuals)
    diff = np.diff(dataset.betas, axis=1) / dataset.tau[None, :, None]
    decay = dataset.lambdas[None, None, :] * dataset.betas[:, 1:]
    return Tensor.ensure(time_scale) * diff + Tensor.ensure(diffusion_scale) * decay


def data_loss(
    net: CoeffNet,
    params: dict[str, Tensor],
    dataset: CoeffDataset,
    eps_floor: float = EPS_FLOOR,
    time_scale: Tensor | float = 1.0,
    diffusion_scale: Tensor | float = 1.0,
) -> Tensor:
    """Mean relative distance between the rollout from beta^0 and the data coefficients."""
    predicted = rollout_tape(net, params, dataset.betas[:, 0], dataset.times, dataset.lambdas, time_scale, diffusion_scale)
    denom = np.maximum(np.linalg.norm(dataset.betas[:, 1:], axis=-1), eps_floor)  # (M, N)
    terms = [(pred - dataset.betas[:, n + 1]).row_norm() / denom[:, n] for n, pred in enumerate(predicted)]
    return stack(terms, axis=1).mean()


def residual_loss(
    net: CoeffNet,
    params: dict[str, Tensor],
    dataset: CoeffDataset,
    eps_floor: float = EPS_FLOOR,
    time_scale: Tensor | float = 1.0,
    diffusion_scale: Tensor | float = 1.0,
) -> Tensor:
    """Mean relative distance between G(beta^{n-1}) on data coefficients and the residual R^n."""
    M, N, width = dataset.M, dataset.N, dataset.width
    inputs = dataset.betas[:, :-1].reshape(M * N, width)
    targets = residual_targets(dataset, time_scale, diffusion_scale)
    targets = targets.reshape(M * N, width)
    outputs = forward_tape(net, params, inputs)
    return ((targets - outputs).row_norm() / targets.row_norm().maximum(eps_floor)).mean()


def loss(
    net: CoeffNet,
    dataset: CoeffDataset,
    mode: LossMode | str = LossMode.COMBINED,
    eps_floor: float = EPS_FLOOR,
    params: dict[str, Tensor] | None = None,
    horizon: int | None = None,
    time_scale: Tensor | float = 1.0,
    diffusion_scale: Tensor | float = 1.0,
) -> LossTerms:
    """Training loss: data term, residual term on the data coefficients, or their sum.

    Both terms are always evaluated so they can be reported; only the ones
    the mode selects enter `total`.
    """
    mode = LossMode(mode)
    if horizon is not None:
        dataset = dataset.head(horizon)
    if dataset.N == 0:
        raise ValidationError("loss needs at least one recorded step")
    if eps_floor <= 0:
        raise ValidationError("eps_floor must be positive")
    params = parameter_tensors(net) if params is None else params
    l_data = data_loss(net, params, dataset, eps_floor, time_scale, diffusion_scale)
    l_res = residual_loss(net, params, dataset, eps_floor, time_scale, diffusion_scale)
    if mode == LossMode.COMBINED:
        total = l_data + l_res
    elif mode == LossMode.DATA_ONLY:
        total = l_data
    else:
        total = l_res
    return LossTerms(total=total, data=l_data, residual=l_res, params=params)
