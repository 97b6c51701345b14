from __future__ import annotations

from dataclasses import replace

import numpy as np

from kiro_leno.operator_learning.entities.coeff_net import AdamState, CoeffNet
from kiro_leno.operator_learning.errors import NumericalError


def adam_update(
    state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam step over the named arrays in `params`.

    Moments for names the state has not seen yet start at zero.
    """
    for name in params:
        if not np.all(np.isfinite(grads[name])):
            raise NumericalError(f"non-finite gradient for {name} at optimizer step {state.step + 1}")

    s = state.settings
    step = state.step + 1
    m, v = dict(state.m), dict(state.v)
    updated = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=float)
        m[name] = s.beta1 * m.get(name, np.zeros_like(g)) + (1.0 - s.beta1) * g
        v[name] = s.beta2 * v.get(name, np.zeros_like(g)) + (1.0 - s.beta2) * g * g
        m_hat = m[name] / (1.0 - s.beta1**step)
        v_hat = v[name] / (1.0 - s.beta2**step)
        updated[name] = value - lr * m_hat / (np.sqrt(v_hat) + s.eps)
    return updated, replace(state, step=step, m=m, v=v)


def adam_step(net: CoeffNet, grads: dict[str, np.ndarray], state: AdamState, epoch: int) -> tuple[CoeffNet, AdamState]:
    """Update the trainable parameters of `net` with the scheduled learning rate for `epoch`."""
    lr = state.settings.lr_at(epoch)
    params = {name: net.params[name] for name in net.trainable}
    updated, state = adam_update(state, params, grads, lr)
    return net.with_params(updated), state
