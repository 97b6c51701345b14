from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset, compute_residuals
from kiro_leno.operator_learning.entities.coeff_net import AdamSettings, AdamState, CoeffNet
from kiro_leno.operator_learning.entities.domain import (
    BCKind,
    BoundaryCondition,
    DiffusionKind,
    DiffusionSpec,
    Domain,
    DomainKind,
)
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.error_report import ErrorReport, VariableErrors
from kiro_leno.operator_learning.entities.lift import BoundaryLift
from kiro_leno.operator_learning.entities.problem import ProblemDefaults, ProblemSpec
from kiro_leno.operator_learning.entities.training import EpochRecord, LossMode, RolloutState, TrainConfig
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.entities.transfer import TransferConfig

__all__ = [
    "AdamSettings",
    "AdamState",
    "BCKind",
    "BoundaryCondition",
    "BoundaryLift",
    "CoeffDataset",
    "CoeffNet",
    "DiffusionKind",
    "DiffusionSpec",
    "Domain",
    "DomainKind",
    "EigenBasis",
    "EpochRecord",
    "ErrorReport",
    "LossMode",
    "ProblemDefaults",
    "ProblemSpec",
    "RolloutState",
    "TrainConfig",
    "TrajectorySet",
    "TransferConfig",
    "VariableErrors",
    "compute_residuals",
]
