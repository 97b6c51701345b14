"""Rasterised irregular domains for masked-grid bases."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
from scipy import ndimage

from kiro_leno.operator_learning.entities.domain import Domain
from kiro_leno.operator_learning.errors import ValidationError

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def _centres(bounds, resolution) -> tuple[np.ndarray, np.ndarray]:
    axes = [a + (np.arange(n) + 0.5) * (b - a) / n for (a, b), n in zip(bounds, resolution, strict=True)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    # normalise to [-1, 1] so shape parameters are resolution independent
    (ax, bx), (ay, by) = bounds
    return 2 * (X - ax) / (bx - ax) - 1, 2 * (Y - ay) / (by - ay) - 1


def disk(x, y, radius: float = 0.8) -> np.ndarray:
    return x**2 + y**2 <= radius**2


def ellipse(x, y, a: float = 0.9, b: float = 0.55, angle: float = 0.4) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    u, v = c * x + s * y, -s * x + c * y
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def l_shape(x, y, size: float = 0.85) -> np.ndarray:
    inside = (np.abs(x) <= size) & (np.abs(y) <= size)
    return inside & ~((x > 0) & (y > 0))


def blob(x, y, seed: int = 0, modes: int = 6, roughness: float = 0.35) -> np.ndarray:
    """Level set of a smooth random radial perturbation, kept to its largest component."""
    rng = np.random.default_rng(seed)
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    k = np.arange(1, modes + 1)
    amp = roughness * rng.normal(size=modes) / k**1.5
    phase = rng.uniform(0, 2 * np.pi, size=modes)
    radius = 0.7 * (1 + np.sum(amp[:, None, None] * np.cos(k[:, None, None] * theta + phase[:, None, None]), axis=0))
    inside = r <= np.clip(radius, 0.2, 0.95)
    labels, count = ndimage.label(inside)
    if count > 1:
        sizes = ndimage.sum(inside, labels, index=np.arange(1, count + 1))
        inside = labels == (1 + int(np.argmax(sizes)))
    return inside


SHAPES: dict[str, Callable[..., np.ndarray]] = {
    "disk": disk,
    "ellipse": ellipse,
    "l-shape": l_shape,
    "blob": blob,
}


def masked_domain(
    shape: str,
    resolution: tuple[int, int] | int,
    bounds: tuple[tuple[float, float], tuple[float, float]] = UNIT_SQUARE,
    **params,
) -> Domain:
    """Masked-grid domain for a named shape; params go to the shape function (e.g. seed for blob)."""
    if shape not in SHAPES:
        raise ValidationError(f"unknown mask shape '{shape}', expected one of {sorted(SHAPES)}")
    if isinstance(resolution, int):
        resolution = (resolution, resolution)
    x, y = _centres(bounds, resolution)
    mask = ndimage.binary_fill_holes(SHAPES[shape](x, y, **params))
    return Domain.masked(bounds, mask)
