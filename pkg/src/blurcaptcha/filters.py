"""Convolution kernels and Gaussian blur.

Kernels are odd-sized square weight matrices indexed by pixel offsets:
``weights[dy + h][dx + h]`` is the weight w(dx, dy) applied to the input
pixel at (x + dx, y + dy), with h = (size - 1) // 2. Filtering computes

    out(x, y) = round(sum_{dx,dy} w(dx, dy) * in(clamp(x + dx), clamp(y + dy)))

with float64 accumulation, rounding half away from zero, and the result
clamped to 0..255. Out-of-bounds reads replicate the nearest edge pixel,
which keeps constant images exact fixed points of any normalized kernel.

Gaussian kernels sample G(dx, dy) = exp(-(dx^2 + dy^2) / (2 sigma^2))
at integer offsets out to h = ceil(3 sigma) and renormalize to sum 1;
the truncated tail below 0.3% of the mass is absorbed by normalization.
Blur maps its radius parameter directly to sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .raster import ImageGray


class NonPositiveSigma(ValueError):
    """Gaussian sigma must be > 0."""


class NegativeRadius(ValueError):
    """Blur radius must be >= 0."""


# Radii below this render a kernel of half-width ceil(3r) = 1 whose center
# weight is within 1e-80 of 1; treat them as the identity.
IDENTITY_RADIUS = 0.05


class BorderPolicy(Enum):
    """How out-of-bounds pixel reads resolve. Clamp replicates the edge."""

    CLAMP = "clamp"


@dataclass(frozen=True)
class Kernel:
    """Odd-sized square convolution matrix, optionally with a 1D factor."""

    size: int
    weights: tuple[tuple[float, ...], ...]
    separable_factor: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"kernel size must be odd and >= 1, got {self.size}")
        if len(self.weights) != self.size or any(len(row) != self.size for row in self.weights):
            raise ValueError(f"weights must be a {self.size}x{self.size} matrix")
        if self.separable_factor is not None and len(self.separable_factor) != self.size:
            raise ValueError("separable factor length must equal kernel size")

    @property
    def half(self) -> int:
        return (self.size - 1) // 2

    def weight(self, dx: int, dy: int) -> float:
        """Weight applied to the input pixel at offset (dx, dy)."""
        h = self.half
        return self.weights[dy + h][dx + h]

    def to_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    @classmethod
    def from_rows(cls, rows) -> "Kernel":
        weights = tuple(tuple(float(v) for v in row) for row in rows)
        return cls(size=len(weights), weights=weights)

    @classmethod
    def identity(cls) -> "Kernel":
        return cls(size=1, weights=((1.0,),), separable_factor=(1.0,))


def gaussian_kernel_1d(sigma: float) -> tuple[float, ...]:
    """Normalized 1D Gaussian taps g[dx] over dx in [-ceil(3 sigma), +ceil(3 sigma)]."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    h = math.ceil(3 * sigma)
    raw = [math.exp(-(dx * dx) / (2 * sigma * sigma)) for dx in range(-h, h + 1)]
    total = math.fsum(raw)
    return tuple(v / total for v in raw)


def gaussian_kernel_2d(sigma: float) -> Kernel:
    """Normalized 2D Gaussian kernel of size 2*ceil(3 sigma) + 1.

    Weights are sampled directly from the 2D Gaussian surface (the
    1/(2 pi sigma^2) prefactor cancels under normalization), then divided
    by the raw sum. The separable 1D factor is attached; its outer product
    reproduces the 2D weights to within float rounding.
    """
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    h = math.ceil(3 * sigma)
    offsets = range(-h, h + 1)
    raw = [
        [math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) for dx in offsets]
        for dy in offsets
    ]
    total = math.fsum(v for row in raw for v in row)
    weights = tuple(tuple(v / total for v in row) for row in raw)
    return Kernel(size=2 * h + 1, weights=weights, separable_factor=gaussian_kernel_1d(sigma))


def _round_half_away(acc: np.ndarray) -> np.ndarray:
    """Round half away from zero, then clamp into 0..255 uint8."""
    rounded = np.sign(acc) * np.floor(np.abs(acc) + 0.5)
    return np.clip(rounded, 0, 255).astype(np.uint8)


def _clamped_index(n: int, delta: int) -> np.ndarray:
    return np.clip(np.arange(n) + delta, 0, n - 1)


def convolve_float(img: ImageGray, kernel: Kernel) -> np.ndarray:
    """Pre-rounding float64 accumulation of the weighted neighborhood sums."""
    arr = img.to_array().astype(np.float64)
    h = kernel.half
    acc = np.zeros_like(arr)
    for dy in range(-h, h + 1):
        rows = _clamped_index(img.height, dy)
        shifted_rows = arr[rows]
        for dx in range(-h, h + 1):
            w = kernel.weight(dx, dy)
            if w == 0.0:
                continue
            cols = _clamped_index(img.width, dx)
            acc += w * shifted_rows[:, cols]
    return acc


def convolve(img: ImageGray, kernel: Kernel, border: BorderPolicy = BorderPolicy.CLAMP) -> ImageGray:
    """Apply a kernel with clamp borders; output has the input's dimensions."""
    if not isinstance(border, BorderPolicy):
        raise TypeError(f"border must be a BorderPolicy, got {border!r}")
    return ImageGray.from_array(_round_half_away(convolve_float(img, kernel)))


def gaussian_blur(img: ImageGray, radius: float) -> ImageGray:
    """Gaussian blur with sigma = radius via two separable 1D passes.

    The horizontal pass stays in floating point; rounding happens once,
    after the vertical pass. Radius 0 (and anything below the identity
    threshold) returns a pixel-identical copy.
    """
    if radius < 0:
        raise NegativeRadius(f"radius must be >= 0, got {radius}")
    if radius < IDENTITY_RADIUS:
        return ImageGray(img.width, img.height, img.pixels)

    taps = gaussian_kernel_1d(radius)
    h = (len(taps) - 1) // 2

    arr = img.to_array().astype(np.float64)
    horizontal = np.zeros_like(arr)
    for dx in range(-h, h + 1):
        horizontal += taps[dx + h] * arr[:, _clamped_index(img.width, dx)]
    vertical = np.zeros_like(arr)
    for dy in range(-h, h + 1):
        vertical += taps[dy + h] * horizontal[_clamped_index(img.height, dy)]

    return ImageGray.from_array(_round_half_away(vertical))


def total_variation(img: ImageGray) -> int:
    """Sum of absolute differences between horizontally and vertically adjacent pixels."""
    arr = img.to_array().astype(np.int64)
    horiz = np.abs(arr[:, 1:] - arr[:, :-1]).sum()
    vert = np.abs(arr[1:, :] - arr[:-1, :]).sum()
    return int(horiz + vert)
