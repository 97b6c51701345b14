from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger

from kiro_leno.operator_learning.dataset.artifacts import save_model
from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import AdamState, CoeffNet
from kiro_leno.operator_learning.entities.training import EpochRecord, TrainConfig
from kiro_leno.operator_learning.errors import LenoError, TrainingAborted, ValidationError
from kiro_leno.operator_learning.leno.loss import loss
from kiro_leno.operator_learning.neuralnet.adam import adam_step
from kiro_leno.operator_learning.neuralnet.network import backward
from kiro_leno.operator_learning.reporting.renderer import write_history_csv


@dataclass
class TrainResult:
    net: CoeffNet
    history: list[EpochRecord]
    state: AdamState
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> EpochRecord:
        return self.history[-1]


def _check_compatible(net: CoeffNet, dataset: CoeffDataset) -> None:
    if net.input_size != dataset.width or net.output_size != dataset.width:
        raise ValidationError(
            f"network {net.input_size}->{net.output_size} does not fit {dataset.width}-wide coefficients"
        )


def train(
    net: CoeffNet,
    dataset: CoeffDataset,
    config: TrainConfig | None = None,
    state: AdamState | None = None,
    history_path: Path | str | None = None,
) -> TrainResult:
    """Full-batch Adam on the configured loss.

    Each history row holds the loss evaluated before that epoch's update.
    A non-finite loss or rollout aborts with the history so far.
    """
    config = config or TrainConfig()
    _check_compatible(net, dataset)
    if config.horizon is not None:
        dataset = dataset.head(min(config.horizon, dataset.N))
    if dataset.N == 0:
        raise ValidationError("training needs at least one recorded step")
    state = state or AdamState.for_net(net, config.optimizer)
    meta = {
        "basis_hash": dataset.basis_hash,
        "loss_mode": config.loss_mode.value,
        "horizon": dataset.N,
        "seed": config.seed,
        "variables": dataset.variables,
        "P": dataset.P,
        "config": config.model_dump(mode="json"),
    }
    if net.seed is not None and net.seed != config.seed:
        logger.warning(f"network was initialised with seed {net.seed}, training config records seed {config.seed}")
    logger.info(
        f"Training {'-'.join(map(str, net.layer_sizes))} net on M={dataset.M}, N={dataset.N} "
        f"for {config.epochs} epochs ({config.loss_mode.value})"
    )

    history: list[EpochRecord] = []
    start = time.perf_counter()
    for epoch in range(config.epochs):
        lr = config.optimizer.lr_at(epoch)
        try:
            terms = loss(net, dataset, config.loss_mode, config.eps_floor)
            total, l_data, l_res = terms.values()
            if not math.isfinite(total):
                raise TrainingAborted(f"non-finite loss at epoch {epoch}", history)
            grads = backward(terms.total, terms.params)
            net, state = adam_step(net, grads, state, epoch)
        except TrainingAborted:
            _flush(history, history_path)
            raise
        except LenoError as e:
            _flush(history, history_path)
            raise TrainingAborted(f"epoch {epoch}: {e}", history) from e
        history.append(
            EpochRecord(
                epoch=epoch, loss=total, loss_data=l_data, loss_residual=l_res, lr=lr, wall=time.perf_counter() - start
            )
        )

        if epoch % config.log_every == 0 or epoch == config.epochs - 1:
            logger.info(f"epoch {epoch:>6d}  L={total:.4e}  L^D={l_data:.4e}  L^R={l_res:.4e}  lr={lr:.2e}")
        if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            checkpoint_dir = Path(config.checkpoint_dir or ".")
            path = checkpoint_dir / f"checkpoint_{epoch + 1:06d}.leno"
            checkpoint_dir.mkdir(parents=True, exist_ok=True)
            save_model(net, path, state, {**meta, "epochs_done": epoch + 1})
            logger.debug(f"Checkpoint written to {path}")

    _flush(history, history_path)
    meta["epochs_done"] = config.epochs
    meta["final_loss"] = history[-1].loss
    return TrainResult(net=net, history=history, state=state, meta=meta)


def _flush(history: list[EpochRecord], path: Path | str | None) -> None:
    if path is not None and history:
        write_history_csv(history, path)
