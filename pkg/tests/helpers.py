"""Builders shared by several test modules."""

import numpy as np

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset, compute_residuals
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.leno.rollout import rollout


def zero_net(width: int, hidden: int = 4) -> CoeffNet:
    params = {
        "W0": np.zeros((width, hidden)),
        "b0": np.zeros(hidden),
        "W1": np.zeros((hidden, width)),
        "b1": np.zeros(width),
    }
    return CoeffNet((width, hidden, width), params)


def rollout_dataset(
    net: CoeffNet, M: int = 3, N: int = 4, tau: float = 0.01, seed: int = 0, variables: int = 1
) -> CoeffDataset:
    """Dataset whose coefficients are an exact rollout of `net`, so both loss terms vanish for it."""
    rng = np.random.default_rng(seed)
    width = net.input_size
    lambdas = np.linspace(1.0, 20.0, width)
    times = tau * np.arange(N + 1)
    beta0 = 0.5 * rng.standard_normal((M, width))
    betas = rollout(net, beta0, times, lambdas).betas
    return CoeffDataset(
        basis_hash="0x0000000000000000",
        times=times,
        betas=betas,
        residuals=compute_residuals(betas, times, lambdas),
        lambdas=lambdas,
        provenance={"variables": variables},
    )
