"""Semi-implicit coefficient rollout, training loss and loop, learned operator and prediction."""

from kiro_leno.operator_learning.leno.loss import LossTerms, data_loss, loss, residual_loss, residual_targets
from kiro_leno.operator_learning.leno.operator import (
    Prediction,
    field_norms,
    learned_operator,
    predict,
    project_fields,
    reconstruct_fields,
)
from kiro_leno.operator_learning.leno.rollout import rollout, rollout_factors, rollout_tape
from kiro_leno.operator_learning.leno.trainer import TrainResult, train

__all__ = [
    "LossTerms",
    "Prediction",
    "TrainResult",
    "data_loss",
    "field_norms",
    "learned_operator",
    "loss",
    "predict",
    "project_fields",
    "reconstruct_fields",
    "residual_loss",
    "residual_targets",
    "rollout",
    "rollout_factors",
    "rollout_tape",
    "train",
]
