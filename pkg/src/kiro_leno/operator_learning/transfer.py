"""Adapt a trained model to a new subject: retrain the output layer and fit the time scale alpha (and D)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from tabulate import tabulate

from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import AdamSettings, AdamState, CoeffNet
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.training import EpochRecord
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.entities.transfer import TransferConfig
from kiro_leno.operator_learning.errors import LenoError, TrainingAborted, ValidationError
from kiro_leno.operator_learning.leno.loss import loss
from kiro_leno.operator_learning.metrics import evaluate
from kiro_leno.operator_learning.neuralnet.adam import adam_step, adam_update
from kiro_leno.operator_learning.neuralnet.autograd import Tensor
from kiro_leno.operator_learning.neuralnet.network import backward, parameter_tensors, split_for_transfer
from kiro_leno.operator_learning.pde_lab.reference_solver import generate_trajectories
from kiro_leno.operator_learning.reporting.renderer import write_history_csv, write_rows_csv

ACCURACY_HEADERS = ["subject", "1-L^D", "1-E_L2", "1-E_Res", "alpha", "D"]


@dataclass
class TransferResult:
    net: CoeffNet
    alpha: float
    diffusion: float
    history: list[EpochRecord]
    scales: list[tuple[float, float]] = field(default_factory=list)  # (alpha, D) before each update


def transfer_train(
    base_net: CoeffNet,
    dataset: CoeffDataset,
    config: TransferConfig | None = None,
    basis_hash: str | None = None,
    history_path: Path | str | None = None,
) -> TransferResult:
    """Retrain the final layer of `base_net` on a new dataset with a learned time scale.

    The rollout step becomes tau / alpha and the residual target
    alpha (beta^n - beta^{n-1}) / tau + D Lambda beta^n; log alpha and log D
    are the trained quantities.
    """
    config = config or TransferConfig()
    if basis_hash is not None and basis_hash != dataset.basis_hash:
        raise ValidationError(f"dataset basis {dataset.basis_hash} differs from the model's basis {basis_hash}")
    if base_net.input_size != dataset.width:
        raise ValidationError(f"network width {base_net.input_size} does not match dataset width {dataset.width}")
    net = split_for_transfer(base_net)
    state = AdamState.for_net(net, AdamSettings(lr=config.lr))
    scale_state = AdamState(settings=AdamSettings(lr=config.scale_lr or config.lr))
    log_scales = {
        "log_alpha": np.array(math.log(config.alpha_init)),
        "log_diffusion": np.array(math.log(config.diffusion_init)),
    }
    trained = {"log_alpha": config.train_alpha, "log_diffusion": config.train_diffusion}
    logger.info(
        f"Transfer: {net.parameter_count(trainable_only=True)} trainable parameters, "
        f"alpha0={config.alpha_init:g} ({'trained' if config.train_alpha else 'fixed'}), "
        f"D0={config.diffusion_init:g} ({'trained' if config.train_diffusion else 'fixed'})"
    )

    history: list[EpochRecord] = []
    scales: list[tuple[float, float]] = []
    start = time.perf_counter()
    for epoch in range(config.epochs):
        params = parameter_tensors(net)
        leaves = {name: Tensor(value, requires_grad=trained[name], name=name) for name, value in log_scales.items()}
        try:
            terms = loss(
                net,
                dataset,
                config.loss_mode,
                config.eps_floor,
                params=params,
                time_scale=leaves["log_alpha"].exp(),
                diffusion_scale=leaves["log_diffusion"].exp(),
            )
            total, l_data, l_res = terms.values()
            if not math.isfinite(total):
                raise TrainingAborted(f"non-finite transfer loss at epoch {epoch}", history)
            grads = backward(terms.total, params)
            lr = state.settings.lr_at(epoch)
            scales.append((math.exp(float(log_scales["log_alpha"])), math.exp(float(log_scales["log_diffusion"]))))
            net, state = adam_step(net, grads, state, epoch)
            active = {name: value for name, value in log_scales.items() if trained[name]}
            if active:
                scale_grads = {name: leaves[name].grad if leaves[name].grad is not None else np.zeros(()) for name in active}
                updated, scale_state = adam_update(scale_state, active, scale_grads, scale_state.settings.lr_at(epoch))
                log_scales.update(updated)
        except TrainingAborted:
            _flush(history, history_path)
            raise
        except LenoError as e:
            _flush(history, history_path)
            raise TrainingAborted(f"transfer epoch {epoch}: {e}", history) from e
        history.append(
            EpochRecord(
                epoch=epoch, loss=total, loss_data=l_data, loss_residual=l_res, lr=lr, wall=time.perf_counter() - start
            )
        )
        if epoch % config.log_every == 0 or epoch == config.epochs - 1:
            alpha, diffusion = scales[-1]
            logger.info(f"transfer epoch {epoch:>5d}  L={total:.4e}  L^D={l_data:.4e}  alpha={alpha:.4f}  D={diffusion:.4f}")

    _flush(history, history_path)
    alpha = math.exp(float(log_scales["log_alpha"]))
    diffusion = math.exp(float(log_scales["log_diffusion"]))
    logger.info(f"Transfer finished: alpha={alpha:.4f}, D={diffusion:.4f}")
    return TransferResult(net=net, alpha=alpha, diffusion=diffusion, history=history, scales=scales)


def _flush(history: list[EpochRecord], path: Path | str | None) -> None:
    if path is not None and history:
        write_history_csv(history, path)


def transfer_accuracy(
    result: TransferResult,
    dataset: CoeffDataset,
    bases: EigenBasis | list[EigenBasis],
    trajectories: TrajectorySet | None = None,
) -> dict[str, float]:
    """1 - L^D, 1 - E_L2 and 1 - E_Res of the adapted model on its subject's data."""
    terms = loss(result.net, dataset, time_scale=result.alpha, diffusion_scale=result.diffusion)
    report = evaluate(
        result.net, dataset, bases, trajectories=trajectories, time_scale=result.alpha, diffusion_scale=result.diffusion
    )
    return {
        "1-L^D": 1.0 - float(terms.data.data),
        "1-E_L2": 1.0 - report.e_l2,
        "1-E_Res": 1.0 - report.e_res,
        "alpha": result.alpha,
        "D": result.diffusion,
    }


def accuracy_rows(accuracies: dict[str, dict[str, float]]) -> list[list]:
    return [[subject, *(acc[h] for h in ACCURACY_HEADERS[1:])] for subject, acc in accuracies.items()]


def accuracy_table(accuracies: dict[str, dict[str, float]], tablefmt: str = "github") -> str:
    rows = [
        [row[0], *(f"{v:.2%}" for v in row[1:4]), f"{row[4]:.4f}", f"{row[5]:.4f}"] for row in accuracy_rows(accuracies)
    ]
    return tabulate(rows, headers=ACCURACY_HEADERS, tablefmt=tablefmt)


def write_accuracy_csv(accuracies: dict[str, dict[str, float]], path: Path | str) -> Path:
    return write_rows_csv(path, ACCURACY_HEADERS, accuracy_rows(accuracies))


def synthetic_patients(
    problem: ProblemSpec,
    M: int,
    seed: int,
    alpha: float,
    record_dt: float | None = None,
    n_records: int | None = None,
    threads: int = 1,
) -> TrajectorySet:
    """Trajectories of `problem` whose clock runs alpha times slower.

    A solution u(s) of u_s = D Lap u + F(u) observed at t = alpha s satisfies
    alpha u_t = D Lap u + F(u), so the recorded times are stretched by alpha.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    base = generate_trajectories(problem, M, seed, record_dt, n_records, threads)
    return TrajectorySet(times=base.times * alpha, samples=base.samples, problem=problem, seed=seed)
