"""Closed-form reaction terms F(u), registered by name."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.errors import ValidationError

Fields = list[np.ndarray]


@dataclass(frozen=True)
class Reaction:
    name: str
    variables: int
    params: tuple[str, ...]
    fn: Callable[[Fields, dict[str, float], np.ndarray | None], Fields]


REACTIONS: dict[str, Reaction] = {}


def register_reaction(name: str, variables: int = 1, params: tuple[str, ...] = ()):
    def wrap(fn):
        REACTIONS[name] = Reaction(name, variables, params, fn)
        return fn

    return wrap


def get_reaction(name: str) -> Reaction:
    try:
        return REACTIONS[name]
    except KeyError:
        raise ValidationError(f"unknown reaction '{name}', expected one of {sorted(REACTIONS)}") from None


@register_reaction("zero")
def _zero(u, p, V):
    return [np.zeros_like(u[0])]


@register_reaction("linear", params=("rate",))
def _linear(u, p, V):
    return [p["rate"] * u[0]]


@register_reaction("kpp")
def _kpp(u, p, V):
    return [u[0] * (1.0 - u[0])]


@register_reaction("allen-cahn", params=("sign",))
def _allen_cahn(u, p, V):
    # W'(u) = u^3 - u on the right-hand side as written; sign=-1 gives the gradient flow
    return [p["sign"] * (u[0] ** 3 - u[0])]


@register_reaction("gray-scott", variables=2, params=("rho", "mu"))
def _gray_scott(u, p, V):
    A, S = u
    SA2 = S * A * A
    return [SA2 - (p["mu"] + p["rho"]) * A, -SA2 + p["rho"] * (1.0 - S)]


@register_reaction("schrodinger", params=("alpha", "lambda_eig"))
def _schrodinger(u, p, V):
    if V is None:
        raise ValidationError("schrodinger reaction needs a potential")
    return [p["lambda_eig"] * u[0] - V * u[0] - p["alpha"] * u[0] ** 3]


def evaluate_reaction(problem: ProblemSpec, fields: np.ndarray) -> np.ndarray:
    """F(u) for fields shaped (..., c, *grid)."""
    reaction = get_reaction(problem.reaction)
    dim = problem.domain.dim
    fields = np.asarray(fields, dtype=float)
    var_axis = fields.ndim - dim - 1
    if var_axis < 0 or fields.shape[var_axis] != reaction.variables:
        raise ValidationError(f"{reaction.name} expects {reaction.variables} variables, got shape {fields.shape}")
    parts = [np.take(fields, k, axis=var_axis) for k in range(reaction.variables)]
    return np.stack(reaction.fn(parts, problem.params, problem.potential), axis=var_axis)


def reaction_for(problem: ProblemSpec) -> Callable[[np.ndarray], np.ndarray]:
    return lambda fields: evaluate_reaction(problem, fields)
