"""Gaussian random fields N(0, s (L + k I)^-p) expanded in an eigenbasis."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.spectral_basis.basis import reconstruct


class GRFParams(BaseModel):
    variance_scale: float = Field(default=49.0, ge=0)
    shift: float = 7.0
    power: float = 2.5
    model_config = ConfigDict(frozen=True)


def grf_std(lambdas: np.ndarray, params: GRFParams) -> np.ndarray:
    """sigma_i = sqrt(scale) (lambda_i + shift)^(-power / 2)."""
    return np.sqrt(params.variance_scale) * (np.asarray(lambdas) + params.shift) ** (-params.power / 2)


def sample_grf_coeffs(
    basis: EigenBasis, count: int, seed: int, variables: int = 1, params: GRFParams | None = None
) -> np.ndarray:
    """Coefficients (count, variables, P); sample i, variable v uses its own stream (seed, i, v)."""
    sigma = grf_std(basis.lambdas, params or GRFParams())
    out = np.empty((count, variables, basis.P))
    for i in range(count):
        for v in range(variables):
            out[i, v] = np.random.default_rng([seed, i, v]).standard_normal(basis.P) * sigma
    return out


def sample_grf_batch(
    basis: EigenBasis, count: int, seed: int, variables: int = 1, params: GRFParams | None = None
) -> np.ndarray:
    """Fields (count, variables, *grid)."""
    return reconstruct(basis, sample_grf_coeffs(basis, count, seed, variables, params))


def sample_grf(
    basis: EigenBasis,
    variance_scale: float = 49.0,
    shift: float = 7.0,
    power: float = 2.5,
    seed: int = 0,
) -> np.ndarray:
    params = GRFParams(variance_scale=variance_scale, shift=shift, power=power)
    return sample_grf_batch(basis, 1, seed, 1, params)[0, 0]
