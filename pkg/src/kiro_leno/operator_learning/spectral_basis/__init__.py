from kiro_leno.operator_learning.spectral_basis.assembly import (
    DiscreteOperator,
    assemble_operator,
    boundary_measure,
)
from kiro_leno.operator_learning.spectral_basis.basis import build_basis, project, reconstruct
from kiro_leno.operator_learning.spectral_basis.masks import masked_domain

__all__ = [
    "DiscreteOperator",
    "assemble_operator",
    "boundary_measure",
    "build_basis",
    "masked_domain",
    "project",
    "reconstruct",
]
