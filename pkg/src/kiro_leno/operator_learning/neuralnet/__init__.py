"""Fully connected coefficient network with a numpy gradient tape and Adam."""

from kiro_leno.operator_learning.neuralnet.adam import adam_step, adam_update
from kiro_leno.operator_learning.neuralnet.autograd import Tensor, stack
from kiro_leno.operator_learning.neuralnet.network import (
    backward,
    forward,
    forward_tape,
    parameter_tensors,
    split_for_transfer,
)

__all__ = [
    "Tensor",
    "adam_step",
    "adam_update",
    "backward",
    "forward",
    "forward_tape",
    "parameter_tensors",
    "split_for_transfer",
    "stack",
]
