"""Raster image primitives and the classical edge-detection chain.

Grayscale conversion, Gaussian blur, Sobel gradients, and a Canny edge
detector (non-maximum suppression plus double-threshold hysteresis).
Everything operates on numpy-backed images and is a pure function of its
inputs, so frames can be processed concurrently without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as _ndimage

# ITU-R BT.601 luma weights.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])

# Hysteresis thresholds compare against the Sobel magnitude divided by 4,
# which maps the largest step response (4 * 255) back onto the 8-bit scale.
MAGNITUDE_SCALE = 0.25


def _round_half_up(values: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero toward +inf."""
    return np.floor(values + 0.5)


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB frame stored row-major as a (height, width, 3) array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"RgbImage expects (h, w, 3) pixels, got shape {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("channel intensities must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_flat(cls, width: int, height: int, data) -> "RgbImage":
        flat = np.asarray(data, dtype=np.uint8)
        if flat.size != width * height * 3:
            raise ValueError(
                f"flat RGB data length {flat.size} != width*height*3 = {width * height * 3}"
            )
        return cls(flat.reshape(height, width, 3))


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale frame stored row-major as a (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2:
            raise ValueError(f"GrayImage expects (h, w) pixels, got shape {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if p.dtype != np.uint8:
            if p.min() < 0 or p.max() > 255:
                raise ValueError("intensities must lie in [0, 255]")
            p = p.astype(np.uint8)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_rgb(self) -> RgbImage:
        """Replicate the gray channel into R, G and B."""
        return RgbImage(np.repeat(self.pixels[:, :, None], 3, axis=2))


@dataclass(frozen=True)
class GradientField:
    """Per-pixel gradient magnitude and unsigned orientation in [0, pi)."""

    magnitude: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.magnitude, dtype=np.float64)
        o = np.asarray(self.orientation, dtype=np.float64)
        if m.shape != o.shape or m.ndim != 2:
            raise ValueError("magnitude and orientation must be equal-shape 2-D arrays")
        object.__setattr__(self, "magnitude", m)
        object.__setattr__(self, "orientation", o)

    @property
    def width(self) -> int:
        return self.magnitude.shape[1]

    @property
    def height(self) -> int:
        return self.magnitude.shape[0]


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge raster; every value is exactly 0 or 1."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2:
            raise ValueError(f"EdgeMap expects a (h, w) array, got shape {d.shape}")
        if not np.isin(d, (0, 1)).all():
            raise ValueError("edge map values must be 0 or 1")
        object.__setattr__(self, "data", d.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class CannyParams:
    """Thresholds and blur settings for the Canny chain.

    Thresholds apply to the Sobel magnitude scaled by 1/4 (8-bit range).
    """

    low: float = 50.0
    high: float = 150.0
    blur_kernel: int = 5
    blur_sigma: float = 1.4

    def __post_init__(self):
        if self.low < 0:
            raise ValueError("low threshold must be >= 0")
        if self.low > self.high:
            raise ValueError(f"low threshold {self.low} exceeds high {self.high}")
        if self.blur_kernel < 3 or self.blur_kernel % 2 == 0:
            raise ValueError(f"blur kernel must be an odd size >= 3, got {self.blur_kernel}")
        if self.blur_sigma <= 0:
            raise ValueError("blur sigma must be positive")


def to_gray(img: RgbImage) -> GrayImage:
    """BT.601 weighted grayscale: round(0.299 R + 0.587 G + 0.114 B)."""
    rgb = img.pixels.astype(np.float64)
    wr, wg, wb = GRAY_WEIGHTS
    lum = rgb[..., 0] * wr + rgb[..., 1] * wg + rgb[..., 2] * wb
    return GrayImage(np.clip(_round_half_up(lum), 0, 255).astype(np.uint8))


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """2-D Gaussian tap weights, normalized to sum exactly given by float sum."""
    if size < 3 or size % 2 == 0:
        raise ValueError(f"kernel size must be an odd integer >= 3, got {size}")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = size // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def gaussian_blur(img: GrayImage, kernel_size: int = 5, sigma: float = 1.4) -> GrayImage:
    """Convolve with a normalized Gaussian; borders replicate the edge pixel.

    The accumulation runs over kernel taps in row-major order so the result
    is bit-reproducible against a straightforward per-pixel evaluation.
    """
    kernel = gaussian_kernel(kernel_size, sigma)
    half = kernel_size // 2
    src = np.pad(img.pixels.astype(np.float64), half, mode="edge")
    h, w = img.pixels.shape
    acc = np.zeros((h, w), dtype=np.float64)
    for dy in range(kernel_size):
        for dx in range(kernel_size):
            acc = acc + kernel[dy, dx] * src[dy : dy + h, dx : dx + w]
    return GrayImage(np.clip(_round_half_up(acc), 0, 255).astype(np.uint8))


def sobel_gradients(img: GrayImage) -> GradientField:
    """3x3 Sobel gradients with replicated borders.

    magnitude = sqrt(gx^2 + gy^2); orientation = atan2(gy, gx) folded into
    [0, pi) (unsigned gradients, y axis pointing down).
    """
    h, w = img.pixels.shape
    if h < 3 or w < 3:
        raise ValueError(f"image must be at least 3x3 for Sobel, got {w}x{h}")
    src = np.pad(img.pixels.astype(np.float64), 1, mode="edge")
    gx = np.zeros((h, w), dtype=np.float64)
    gy = np.zeros((h, w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            window = src[dy : dy + h, dx : dx + w]
            if SOBEL_X[dy, dx] != 0.0:
                gx = gx + SOBEL_X[dy, dx] * window
            if SOBEL_Y[dy, dx] != 0.0:
                gy = gy + SOBEL_Y[dy, dx] * window
    magnitude = np.sqrt(gx * gx + gy * gy)
    orientation = np.arctan2(gy, gx)
    orientation = np.where(orientation < 0.0, orientation + np.pi, orientation)
    orientation = np.where(orientation >= np.pi, orientation - np.pi, orientation)
    return GradientField(magnitude, orientation)


def quantize_direction(orientation: np.ndarray) -> np.ndarray:
    """Map orientations in [0, pi) onto 4 neighbor axes.

    0: gradient ~horizontal (compare left/right), 1: ~45 deg diagonal,
    2: ~vertical (compare up/down), 3: ~135 deg diagonal.
    """
    return (np.floor((orientation + np.pi / 8) / (np.pi / 4)).astype(np.int64)) % 4


def _nonmax_suppress(magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Keep pixels that are >= both neighbors along the gradient direction.

    Border pixels are suppressed; zero-magnitude pixels never survive.
    """
    h, w = magnitude.shape
    padded = np.pad(magnitude, 1, mode="constant", constant_values=-1.0)
    # neighbor offsets (dy, dx) along the gradient for each direction bin
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros((h, w), dtype=bool)
    for d, (dy, dx) in offsets.items():
        fwd = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        back = padded[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        sel = (direction == d) & (magnitude >= fwd) & (magnitude >= back)
        keep |= sel
    keep &= magnitude > 0.0
    keep[0, :] = keep[-1, :] = False
    keep[:, 0] = keep[:, -1] = False
    return keep


def canny(img: GrayImage, params: CannyParams = CannyParams()) -> EdgeMap:
    """Canny chain: blur -> Sobel -> 4-direction NMS -> hysteresis.

    Strong pixels (scaled magnitude >= high) seed the edge set; weak pixels
    in [low, high) survive only when 8-connected to a surviving pixel.
    """
    blurred = gaussian_blur(img, params.blur_kernel, params.blur_sigma)
    grad = sobel_gradients(blurred)
    mag = grad.magnitude * MAGNITUDE_SCALE
    keep = _nonmax_suppress(mag, quantize_direction(grad.orientation))
    strong = keep & (mag >= params.high)
    weak = keep & (mag >= params.low)
    if not strong.any():
        return EdgeMap(np.zeros_like(img.pixels, dtype=np.uint8))
    labels, _ = _ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    seeded = np.unique(labels[strong])
    edges = np.isin(labels, seeded) & weak
    return EdgeMap(edges.astype(np.uint8))
