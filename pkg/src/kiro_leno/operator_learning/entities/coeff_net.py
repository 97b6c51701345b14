from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from kiro_leno.operator_learning.errors import ValidationError


@dataclass(frozen=True, eq=False)
class CoeffNet:
    """Fully connected ReLU network G: R^{cP} -> R^{cP}.

    Parameters live in `params` as W0, b0, W1, b1, ... with W_l shaped
    (fan_in, fan_out) so a batch x of rows maps to x @ W_l + b_l.
    Names in `frozen` are skipped by the optimizer.
    """

    layer_sizes: tuple[int, ...]
    params: dict[str, np.ndarray]
    seed: int | None = None
    frozen: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValidationError(f"layer sizes {sizes} need an input and an output of positive width")
        object.__setattr__(self, "layer_sizes", sizes)
        params = {}
        for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:], strict=True)):
            w = np.array(self.params[f"W{layer}"], dtype=float)
            b = np.array(self.params[f"b{layer}"], dtype=float)
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValidationError(f"layer {layer} parameters {w.shape}/{b.shape} incompatible with {fan_in}->{fan_out}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {layer} parameters must be finite")
            for arr in (w, b):
                arr.setflags(write=False)
            params[f"W{layer}"], params[f"b{layer}"] = w, b
        object.__setattr__(self, "params", params)
        unknown = set(self.frozen) - set(params)
        if unknown:
            raise ValidationError(f"cannot freeze unknown parameters {sorted(unknown)}")
        object.__setattr__(self, "frozen", frozenset(self.frozen))

    @classmethod
    def init(cls, layer_sizes: list[int] | tuple[int, ...], seed: int) -> CoeffNet:
        """He-normal weights (std sqrt(2 / fan_in)), zero biases."""
        rng = np.random.default_rng(seed)
        params = {}
        for layer, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:], strict=True)):
            params[f"W{layer}"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            params[f"b{layer}"] = np.zeros(fan_out)
        return cls(tuple(layer_sizes), params, seed)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def names(self) -> list[str]:
        return [f"{kind}{layer}" for layer in range(self.n_layers) for kind in ("W", "b")]

    @property
    def trainable(self) -> list[str]:
        return [name for name in self.names if name not in self.frozen]

    def weight(self, layer: int) -> np.ndarray:
        return self.params[f"W{layer}"]

    def bias(self, layer: int) -> np.ndarray:
        return self.params[f"b{layer}"]

    def parameter_count(self, trainable_only: bool = False) -> int:
        names = self.trainable if trainable_only else self.names
        return int(sum(self.params[name].size for name in names))

    def with_params(self, updates: dict[str, np.ndarray]) -> CoeffNet:
        return replace(self, params={**self.params, **updates})

    def with_frozen(self, frozen: set[str] | frozenset[str]) -> CoeffNet:
        return replace(self, frozen=frozenset(frozen))


class AdamSettings(BaseModel):
    """Adam hyperparameters and the step-decay learning-rate schedule."""

    lr: float = Field(default=1e-3, gt=0)
    decay_factor: float = Field(default=0.25, gt=0, le=1)
    decay_every: int = Field(default=1000, ge=1)  # epochs
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    model_config = ConfigDict(frozen=True)

    def lr_at(self, epoch: int) -> float:
        return self.lr * self.decay_factor ** (epoch // self.decay_every)


@dataclass
class AdamState:
    settings: AdamSettings
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_net(cls, net: CoeffNet, settings: AdamSettings | None = None) -> AdamState:
        settings = settings or AdamSettings()
        zeros = {name: np.zeros_like(net.params[name]) for name in net.names}
        return cls(settings, 0, zeros, {name: z.copy() for name, z in zeros.items()})
