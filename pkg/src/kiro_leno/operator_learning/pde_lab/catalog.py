"""Built-in benchmark problems, loaded from catalog.yml."""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from loguru import logger

from kiro_leno.operator_learning.entities.domain import BCKind, BoundaryCondition, DiffusionKind, DiffusionSpec, Domain, DomainKind
from kiro_leno.operator_learning.entities.problem import ProblemDefaults, ProblemSpec
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.pde_lab.reactions import get_reaction
from kiro_leno.operator_learning.spectral_basis.masks import masked_domain

# Load once at module import
with open(Path(__file__).parent / "catalog.yml", encoding="utf-8") as f:
    _cfg = yaml.safe_load(f)

CATALOG: dict[str, dict] = _cfg["problems"]

FIELDS = {
    "two-plus-cos": lambda x: 2.0 + np.cos(np.pi * x),
    "schrodinger-potential": lambda x, y: (
        100.0 * (np.sin(np.pi * x / 4) ** 2 + np.sin(np.pi * y / 4) ** 2) + x**2 + y**2
    ),
}

DEFAULT_KEYS = {"record_dt", "train_horizon", "eval_horizon", "modes", "hidden", "samples", "epochs"}
ALIASES = {"dt": "record_dt", "P": "modes"}


def _number(value: Any) -> float:
    """Float from a YAML scalar, accepting a trailing pi factor such as '2pi'."""
    if isinstance(value, str) and value.strip().endswith("pi"):
        factor = value.strip()[:-2].rstrip("*")
        return (float(factor) if factor not in ("", "+", "-") else float(f"{factor}1")) * np.pi
    return float(value)


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _build_domain(spec: dict) -> Domain:
    bounds = tuple((_number(a), _number(b)) for a, b in spec["bounds"])
    resolution = tuple(int(n) for n in spec["resolution"])
    kind = DomainKind(spec["kind"])
    if kind == DomainKind.MASKED_GRID:
        params = {k: v for k, v in spec.items() if k not in ("kind", "bounds", "resolution", "shape")}
        return masked_domain(spec.get("shape", "disk"), resolution, bounds, **params)
    return Domain(kind, bounds, resolution)


def _build_diffusion(entry: dict, domain: Domain, params: dict[str, float]) -> DiffusionSpec:
    kind = DiffusionKind(entry["kind"])
    if "field" in entry:
        return DiffusionSpec.scalar_field(domain, FIELDS[entry["field"]])
    if "param" in entry:
        return DiffusionSpec(kind, params[entry["param"]] ** entry.get("power", 1))
    return DiffusionSpec(kind, np.asarray(entry["value"], dtype=float) if kind != DiffusionKind.CONSTANT else entry["value"])


def _build_bc(spec: dict, domain: Domain) -> BoundaryCondition:
    kind = BCKind(spec["kind"])
    if "value" in spec:
        return BoundaryCondition.constant(kind, _number(spec["value"]), domain)
    return BoundaryCondition(kind)


def _apply_overrides(name: str, cfg: dict, overrides: dict) -> dict:
    cfg = copy.deepcopy(cfg)
    overrides = {ALIASES.get(k, k): v for k, v in overrides.items()}
    if "dim" in overrides:
        dim = int(overrides.pop("dim"))
        current = len(cfg["domain"]["resolution"])
        if dim != current:
            dims = cfg.get("dims", {})
            if dim not in dims:
                raise ValidationError(f"problem '{name}' has no {dim}D variant")
            cfg = _merge(cfg, dims[dim])
    params = cfg.setdefault("params", {})
    for key, value in overrides.items():
        if key in DEFAULT_KEYS:
            cfg["defaults"][key] = value
        elif key == "domain":
            bounds = [value] if np.ndim(value) == 1 else value
            cfg["domain"]["bounds"] = [list(b) for b in bounds]
        elif key == "resolution":
            res = [value] * len(cfg["domain"]["resolution"]) if np.ndim(value) == 0 else list(value)
            cfg["domain"]["resolution"] = res
        elif key == "mask":
            cfg["domain"].update({"kind": DomainKind.MASKED_GRID.value, **value})
        elif key == "bc":
            cfg["bc"] = {"kind": value} if isinstance(value, str) else dict(value)
        elif key == "diffusion":
            values = value if isinstance(value, list) else [value] * len(cfg["diffusion"])
            cfg["diffusion"] = [v if isinstance(v, dict) else {"kind": "constant", "value": float(v)} for v in values]
        elif key == "reaction":
            cfg["reaction"] = value
        elif key in params or key in get_reaction(overrides.get("reaction", cfg["reaction"])).params:
            params[key] = float(value)
        else:
            raise ValidationError(f"unknown override '{key}' for problem '{name}'")
    return cfg


def builtin_problem(name: str, overrides: dict | None = None) -> ProblemSpec:
    """Catalog problem with its published defaults; overrides replace named entries."""
    if name not in CATALOG:
        raise ValidationError(f"unknown problem '{name}', expected one of {sorted(CATALOG)}")
    cfg = _apply_overrides(name, CATALOG[name], overrides or {})

    reaction = get_reaction(cfg["reaction"])
    params = {k: float(v) for k, v in cfg.get("params", {}).items()}
    missing = [p for p in reaction.params if p not in params]
    if missing:
        raise ValidationError(f"problem '{name}' is missing parameters {missing} for reaction '{reaction.name}'")
    if len(cfg["diffusion"]) != reaction.variables:
        raise ValidationError(f"reaction '{reaction.name}' has {reaction.variables} variables, got {len(cfg['diffusion'])} diffusions")

    domain = _build_domain(cfg["domain"])
    diffusion = tuple(_build_diffusion(entry, domain, params) for entry in cfg["diffusion"])
    potential = domain.sample(FIELDS[cfg["potential"]]) if cfg.get("potential") else None
    problem = ProblemSpec(
        name=name,
        domain=domain,
        bc=_build_bc(cfg["bc"], domain),
        diffusion=diffusion,
        reaction=reaction.name,
        params=params,
        potential=potential,
        defaults=ProblemDefaults(**cfg["defaults"]),
    )
    logger.debug(f"Built problem {name}: {domain.kind.value} {domain.shape}, reaction={reaction.name}, params={params}")
    return problem
