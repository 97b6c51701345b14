"""Relative error metrics of a trained model and convergence-order fitting."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from loguru import logger

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import CoeffNet
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.error_report import ErrorReport, VariableErrors
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import ThresholdError, ValidationError
from kiro_leno.operator_learning.leno.operator import bases_for, reconstruct_fields
from kiro_leno.operator_learning.leno.rollout import rollout
from kiro_leno.operator_learning.neuralnet.network import forward

EPS_FLOOR = 1e-12

Reaction = Callable[[np.ndarray], np.ndarray]


def _relative(diff_norm: np.ndarray, ref_norm: np.ndarray) -> float:
    return float(np.mean(diff_norm / np.maximum(ref_norm, EPS_FLOOR)))


def _field_norms(bases: list[EigenBasis], fields: np.ndarray, variables: list[int]) -> np.ndarray:
    dim = bases[0].domain.dim
    squares = [bases[v].norm(np.take(fields, v, axis=-dim - 1)) ** 2 for v in variables]
    return np.sqrt(np.sum(squares, axis=0))


def _block_norms(coeffs: np.ndarray, P: int, variables: list[int]) -> np.ndarray:
    blocks = [coeffs[..., v * P : (v + 1) * P] for v in variables]
    return np.linalg.norm(np.concatenate(blocks, axis=-1), axis=-1)


def nonlinear_error(
    operator: Reaction,
    fields: np.ndarray,
    reference_F: Reaction,
    bases: EigenBasis | list[EigenBasis],
    variables: list[int] | None = None,
) -> float:
    """Mean of |N(u) - F(u)| / |F(u)| over every leading index of (..., c, *grid) fields."""
    bases = [bases] if isinstance(bases, EigenBasis) else list(bases)
    variables = list(range(len(bases))) if variables is None else variables
    fields = np.asarray(fields, dtype=float)
    learned = operator(fields)
    exact = reference_F(fields)
    return _relative(_field_norms(bases, learned - exact, variables), _field_norms(bases, exact, variables))


def evaluate(
    net: CoeffNet,
    dataset: CoeffDataset,
    bases: EigenBasis | list[EigenBasis],
    reference_F: Reaction | None = None,
    trajectories: TrajectorySet | None = None,
    horizon: int | None = None,
    time_scale: float = 1.0,
    diffusion_scale: float = 1.0,
) -> ErrorReport:
    """E_L2, E_Res and (with reference_F) E_Nonlinear, averaged over samples and steps 1..N.

    The rollout starts from the data coefficients beta^0. The true fields
    u(t_n) come from `trajectories` when given, otherwise from the dataset
    coefficients. E_Res feeds the rollout state at step n-1 to G. E_L2 is
    measured in solution units (the stored lift added back); E_Nonlinear
    compares on the fields the network sees, so a lifted problem needs the
    shifted reaction.
    """
    bases = bases_for(net, bases)
    if net.input_size != dataset.width:
        raise ValidationError(f"network width {net.input_size} does not match dataset width {dataset.width}")
    if horizon is not None:
        dataset = dataset.head(horizon)
    if dataset.N == 0:
        raise ValidationError("evaluation needs at least one recorded step")
    c, P, N = len(bases), dataset.P, dataset.N
    grid = bases[0].domain.shape

    state = rollout(net, dataset.betas[:, 0], dataset.times, dataset.lambdas, time_scale, diffusion_scale)
    predicted = reconstruct_fields(bases, state.betas[:, 1:])  # (M, N, c, *grid), shifted units
    lift = np.zeros((c, *grid)) if dataset.lift is None else np.broadcast_to(dataset.lift, (c, *grid))
    if trajectories is not None:
        if trajectories.grid_shape != grid or trajectories.variables != c or trajectories.M != dataset.M:
            raise ValidationError("trajectories do not match the dataset")
        if trajectories.N < N or not np.allclose(trajectories.times[: N + 1], dataset.times):
            raise ValidationError("trajectory times do not match the dataset times")
        truth = trajectories.samples[:, 1 : N + 1]
    else:
        truth = reconstruct_fields(bases, dataset.betas[:, 1:]) + lift

    if time_scale == 1.0 and diffusion_scale == 1.0:
        residuals = dataset.residuals
    else:
        diff = np.diff(dataset.betas, axis=1) / dataset.tau[None, :, None]
        residuals = time_scale * diff + diffusion_scale * dataset.lambdas * dataset.betas[:, 1:]
    g_prev = forward(net, state.betas[:, :-1])

    want_nl = reference_F is not None
    if want_nl:
        learned = reconstruct_fields(bases, forward(net, state.betas[:, 1:]))
        exact = reference_F(truth - lift)

    def metrics_for(variables: list[int]) -> tuple[float, float, float | None]:
        e_l2 = _relative(
            _field_norms(bases, predicted + lift - truth, variables), _field_norms(bases, truth, variables)
        )
        e_res = _relative(_block_norms(g_prev - residuals, P, variables), _block_norms(residuals, P, variables))
        e_nl = None
        if want_nl:
            e_nl = _relative(_field_norms(bases, learned - exact, variables), _field_norms(bases, exact, variables))
        return e_l2, e_res, e_nl

    e_l2, e_res, e_nl = metrics_for(list(range(c)))
    per_variable = []
    if c > 1:
        for v in range(c):
            v_l2, v_res, v_nl = metrics_for([v])
            per_variable.append(VariableErrors(variable=v, e_l2=v_l2, e_res=v_res, e_nonlinear=v_nl))
    report = ErrorReport(
        e_l2=e_l2, e_res=e_res, e_nonlinear=e_nl, per_variable=per_variable, samples=dataset.M, steps=N
    )
    logger.info(
        f"Evaluated M={dataset.M}, N={N}: E_L2={e_l2:.3e} E_Res={e_res:.3e} "
        f"E_Nonlinear={'n/a' if e_nl is None else f'{e_nl:.3e}'}"
    )
    return report


def fit_order(xs, errs) -> tuple[float, float]:
    """Least-squares slope of log(err) against log(x), with its r^2."""
    xs = np.asarray(xs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if xs.shape != errs.shape or xs.ndim != 1 or xs.size < 3:
        raise ValidationError("fit_order needs at least 3 matching points")
    if np.any(xs <= 0) or np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise ValidationError("fit_order needs positive finite values")
    lx, ly = np.log(xs), np.log(errs)
    if np.ptp(lx) == 0:
        raise ValidationError("fit_order needs at least two distinct x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    ss_res = float(np.sum((ly - (slope * lx + intercept)) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def check_thresholds(report: ErrorReport, thresholds: dict[str, float]) -> None:
    """Raise ThresholdError for the first metric above its limit; metrics marked n/a are skipped."""
    values = report.metrics()
    for metric, limit in thresholds.items():
        if metric not in values:
            raise ValidationError(f"unknown metric {metric!r}; expected one of {sorted(values)}")
        value = values[metric]
        if value is None:
            logger.warning(f"{metric} is n/a for this run; threshold {limit:.3e} not checked")
            continue
        if value > limit:
            raise ThresholdError(metric, value, limit)
