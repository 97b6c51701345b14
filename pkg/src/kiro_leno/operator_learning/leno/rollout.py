from __future__ import annotations

import numpy as np

from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.training import RolloutState
from kiro_leno.operator_learning.errors import DivergenceError, NumericalError, ValidationError
from kiro_leno.operator_learning.neuralnet.autograd import Tensor
from kiro_leno.operator_learning.neuralnet.network import forward, forward_tape

# slack for the per-step non-expansiveness check
_EXPANSION_TOL = 1e-10


def rollout_factors(
    times: np.ndarray, lambdas: np.ndarray, time_scale: float = 1.0, diffusion_scale: float = 1.0
) -> np.ndarray:
    """Diagonal (1 + (tau_n / alpha) D Lambda)^-1 for every step, shape (N, cP)."""
    tau = np.diff(np.asarray(times, dtype=float))
    if np.any(tau <= 0):
        raise ValidationError("time grid must have positive increments")
    lam = np.asarray(lambdas, dtype=float)
    return 1.0 / (1.0 + (tau[:, None] / time_scale) * diffusion_scale * lam[None, :])


def _check_step(prev: np.ndarray, nxt: np.ndarray, g: np.ndarray, step: float, n: int) -> None:
    if not np.all(np.isfinite(nxt)):
        raise DivergenceError("rollout produced a non-finite coefficient", n)
    bound = np.linalg.norm(prev, axis=-1) + step * np.linalg.norm(g, axis=-1)
    if np.any(np.linalg.norm(nxt, axis=-1) > bound * (1.0 + _EXPANSION_TOL) + _EXPANSION_TOL):
        raise NumericalError(f"rollout step {n} expanded the linear part; check for negative eigenvalues")


def rollout(
    net: CoeffNet,
    beta0: np.ndarray,
    times: np.ndarray,
    lambdas: np.ndarray,
    time_scale: float = 1.0,
    diffusion_scale: float = 1.0,
) -> RolloutState:
    """Evolve beta^n = F (beta^{n-1} + (tau_n / alpha) G(beta^{n-1})) from data coefficients.

    beta0 is (cP,) or a batch (M, cP); the returned betas are always (M, N+1, cP)
    with betas[:, 0] equal to beta0.
    """
    beta0 = np.atleast_2d(np.asarray(beta0, dtype=float))
    lambdas = np.asarray(lambdas, dtype=float)
    if beta0.shape[-1] != lambdas.size:
        raise ValidationError(f"beta0 width {beta0.shape[-1]} does not match {lambdas.size} eigenvalues")
    if np.any(lambdas < 0):
        raise ValidationError("eigenvalues must be non-negative")
    times = np.asarray(times, dtype=float)
    factors = rollout_factors(times, lambdas, time_scale, diffusion_scale)
    tau = np.diff(times) / time_scale

    betas = np.empty((beta0.shape[0], times.size, lambdas.size))
    betas[:, 0] = beta0
    for n in range(1, times.size):
        prev = betas[:, n - 1]
        g = forward(net, prev)
        betas[:, n] = (prev + tau[n - 1] * g) * factors[n - 1]
        _check_step(prev, betas[:, n], g, tau[n - 1], n)
    return RolloutState(betas=betas, times=times, factors=factors)


def rollout_tape(
    net: CoeffNet,
    params: dict[str, Tensor],
    beta0: np.ndarray,
    times: np.ndarray,
    lambdas: np.ndarray,
    time_scale: Tensor | float = 1.0,
    diffusion_scale: Tensor | float = 1.0,
) -> list[Tensor]:
    """rollout() recorded on the tape; returns beta~^1..beta~^N, each (M, cP).

    time_scale and diffusion_scale may be tensors so their gradients flow
    through every step.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    tau = np.diff(np.asarray(times, dtype=float))
    alpha = Tensor.ensure(time_scale)
    dscale = Tensor.ensure(diffusion_scale)
    prev = Tensor(np.atleast_2d(beta0))
    out = []
    for n in range(1, tau.size + 1):
        step = float(tau[n - 1]) / alpha
        g = forward_tape(net, params, prev)
        nxt = (prev + step * g) / (1.0 + step * dscale * lambdas)
        _check_step(prev.data, nxt.data, g.data, float(step.data), n)
        out.append(nxt)
        prev = nxt
    return out
