"""save/load of bases, trajectories, datasets and models through the .leno container."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np

from kiro_leno.operator_learning.dataset.container import read_container, write_container
from kiro_leno.operator_learning.entities.coeff_dataset import CoeffDataset
from kiro_leno.operator_learning.entities.coeff_net import AdamSettings, AdamState, CoeffNet
from kiro_leno.operator_learning.entities.domain import BoundaryCondition, DiffusionKind, DiffusionSpec, Domain, DomainKind
from kiro_leno.operator_learning.entities.eigen_basis import EigenBasis
from kiro_leno.operator_learning.entities.problem import ProblemDefaults, ProblemSpec
from kiro_leno.operator_learning.entities.trajectory import TrajectorySet
from kiro_leno.operator_learning.errors import FormatError, ValidationError


def _put_domain(domain: Domain, arrays: dict, meta: dict) -> None:
    meta["domain"] = domain.to_meta()
    if domain.mask is not None:
        arrays["mask"] = domain.mask.astype(float)


def _get_domain(meta: dict, arrays: dict) -> Domain:
    d = meta["domain"]
    bounds = tuple(tuple(b) for b in d["bounds"])
    if d["kind"] == DomainKind.MASKED_GRID.value:
        return Domain.masked(bounds, arrays["mask"] > 0.5)
    return Domain(DomainKind(d["kind"]), bounds, tuple(d["resolution"]))


def _put_diffusion(diffusion: DiffusionSpec, name: str, arrays: dict) -> dict:
    if diffusion.is_constant:
        return {"kind": diffusion.kind.value, "value": float(diffusion.value)}
    arrays[name] = np.asarray(diffusion.value)
    return {"kind": diffusion.kind.value, "array": name}


def _get_diffusion(meta: dict, arrays: dict) -> DiffusionSpec:
    kind = DiffusionKind(meta["kind"])
    return DiffusionSpec(kind, meta["value"] if "value" in meta else arrays[meta["array"]])


def _put_problem(problem: ProblemSpec, arrays: dict, meta: dict) -> None:
    _put_domain(problem.domain, arrays, meta)
    if problem.bc.g is not None:
        arrays["bc_g"] = problem.bc.g
    if problem.potential is not None:
        arrays["potential"] = problem.potential
    meta["problem"] = {
        "name": problem.name,
        "reaction": problem.reaction,
        "params": problem.params,
        "bc": problem.bc.kind.value,
        "diffusion": [_put_diffusion(d, f"diffusion{v}", arrays) for v, d in enumerate(problem.diffusion)],
        "defaults": problem.defaults.model_dump() if problem.defaults else None,
    }


def _get_problem(meta: dict, arrays: dict) -> ProblemSpec:
    p = meta["problem"]
    return ProblemSpec(
        name=p["name"],
        domain=_get_domain(meta, arrays),
        bc=BoundaryCondition(p["bc"], arrays.get("bc_g")),
        diffusion=tuple(_get_diffusion(d, arrays) for d in p["diffusion"]),
        reaction=p["reaction"],
        params=p["params"],
        potential=arrays.get("potential"),
        defaults=ProblemDefaults(**p["defaults"]) if p.get("defaults") else None,
    )


def save_basis(basis: EigenBasis, path: Path | str) -> str:
    arrays = {"lambdas": basis.lambdas, "modes": basis.modes, "weights": basis.weights}
    meta: dict[str, Any] = {"bc": basis.bc_kind.value, "P": basis.P, "solver": basis.solver, "basis_hash": basis.hash}
    _put_domain(basis.domain, arrays, meta)
    meta["diffusion"] = _put_diffusion(basis.diffusion, "diffusion", arrays)
    return write_container(path, "basis", arrays, meta)


def load_basis(path: Path | str) -> EigenBasis:
    c = read_container(path, "basis")
    P = int(c.meta["P"])
    for name in ("lambdas", "modes"):
        if c.arrays[name].shape[0] != P:
            raise FormatError(f"header declares P={P} but {name} holds {c.arrays[name].shape[0]} modes")
    return EigenBasis(
        domain=_get_domain(c.meta, c.arrays),
        bc_kind=c.meta["bc"],
        diffusion=_get_diffusion(c.meta["diffusion"], c.arrays),
        lambdas=c.arrays["lambdas"],
        modes=c.arrays["modes"],
        weights=c.arrays["weights"],
        solver=c.meta["solver"],
    )


def save_trajectories(traj: TrajectorySet, path: Path | str) -> str:
    arrays = {"times": traj.times, "samples": traj.samples}
    meta: dict[str, Any] = {"seed": traj.seed, "M": traj.M, "N": traj.N}
    if traj.problem is not None:
        _put_problem(traj.problem, arrays, meta)
    return write_container(path, "traj", arrays, meta)


def load_trajectories(path: Path | str) -> TrajectorySet:
    c = read_container(path, "traj")
    if c.arrays["samples"].shape[:2] != (c.meta["M"], c.meta["N"] + 1):
        raise FormatError(f"header declares M={c.meta['M']}, N={c.meta['N']} but samples are {c.arrays['samples'].shape}")
    problem = _get_problem(c.meta, c.arrays) if "problem" in c.meta else None
    return TrajectorySet(times=c.arrays["times"], samples=c.arrays["samples"], problem=problem, seed=c.meta["seed"])


def save_dataset(dataset: CoeffDataset, path: Path | str) -> str:
    arrays = {
        "times": dataset.times,
        "betas": dataset.betas,
        "residuals": dataset.residuals,
        "lambdas": dataset.lambdas,
    }
    if dataset.lift is not None:
        arrays["lift"] = dataset.lift
    meta = {
        "basis_hash": dataset.basis_hash,
        "provenance": dataset.provenance,
        "M": dataset.M,
        "N": dataset.N,
        "width": dataset.width,
    }
    return write_container(path, "dataset", arrays, meta)


def load_dataset(path: Path | str) -> CoeffDataset:
    c = read_container(path, "dataset")
    declared = (c.meta["M"], c.meta["N"] + 1, c.meta["width"])
    if c.arrays["betas"].shape != declared:
        raise FormatError(f"header declares betas {declared} but payload holds {c.arrays['betas'].shape}")
    return CoeffDataset(
        basis_hash=c.meta["basis_hash"],
        times=c.arrays["times"],
        betas=c.arrays["betas"],
        residuals=c.arrays["residuals"],
        lambdas=c.arrays["lambdas"],
        provenance=c.meta["provenance"],
        lift=c.arrays.get("lift"),
    )


def save_model(
    net: CoeffNet, path: Path | str, state: AdamState | None = None, meta: dict[str, Any] | None = None
) -> str:
    """Parameters, optional optimizer moments and training metadata (basis hash, scales, config)."""
    arrays = {name: net.params[name] for name in net.names}
    header: dict[str, Any] = {
        "layer_sizes": list(net.layer_sizes),
        "seed": net.seed,
        "frozen": sorted(net.frozen),
        "training": meta or {},
    }
    if state is not None:
        for name in net.names:
            arrays[f"adam_m.{name}"] = state.m[name]
            arrays[f"adam_v.{name}"] = state.v[name]
        header["adam"] = {"step": state.step, "settings": state.settings.model_dump()}
    return write_container(path, "model", arrays, header)


def load_model(path: Path | str) -> tuple[CoeffNet, AdamState | None, dict[str, Any]]:
    c = read_container(path, "model")
    sizes = c.meta["layer_sizes"]
    names = [f"{kind}{layer}" for layer in range(len(sizes) - 1) for kind in ("W", "b")]
    missing = [n for n in names if n not in c.arrays]
    if missing:
        raise FormatError(f"model container lacks parameters {missing}")
    try:
        net = CoeffNet(tuple(sizes), {n: c.arrays[n] for n in names}, c.meta["seed"], frozenset(c.meta["frozen"]))
    except ValidationError as e:
        raise FormatError(f"model parameters do not match declared layer sizes: {e}") from e
    state = None
    if "adam" in c.meta:
        state = AdamState(
            settings=AdamSettings(**c.meta["adam"]["settings"]),
            step=int(c.meta["adam"]["step"]),
            m={n: c.arrays[f"adam_m.{n}"] for n in names},
            v={n: c.arrays[f"adam_v.{n}"] for n in names},
        )
    return net, state, c.meta.get("training", {})


_SAVERS = [
    (EigenBasis, save_basis),
    (TrajectorySet, save_trajectories),
    (CoeffDataset, save_dataset),
    (CoeffNet, save_model),
]
_LOADERS = {"basis": load_basis, "traj": load_trajectories, "dataset": load_dataset}


def save(obj: EigenBasis | TrajectorySet | CoeffDataset | CoeffNet, path: Path | str) -> str:
    for cls, saver in _SAVERS:
        if isinstance(obj, cls):
            return saver(obj, path)
    raise ValidationError(f"cannot persist objects of type {type(obj).__name__}")


def load(path: Path | str) -> EigenBasis | TrajectorySet | CoeffDataset | CoeffNet:
    kind = read_container(path).kind
    if kind == "model":
        return load_model(path)[0]
    return _LOADERS[kind](path)
