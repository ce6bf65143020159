"""Images, Gaussian kernels, separable blur and screen geometry.

Conventions used across the package:

* images are ``float64`` arrays of shape ``(height, width, channels)`` with
  intensities in ``[0, 1]``;
* coordinates are ``(x, y)`` with the origin at the top-left, x to the right,
  y downwards, and pixel centres at integer coordinates;
* a coordinate is inside an image of size ``W x H`` when ``0 <= x <= W`` and
  ``0 <= y <= H``; it maps to the nearest pixel centre, clamped to the grid.

Borders are handled by half-sample symmetric reflection (``d c b a | a b c d``),
which keeps constant images constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInput, InvalidParameter

DEFAULT_TRUNCATION = 3.0


@dataclass(frozen=True, eq=False)
class Stimulus:
    """An image with intensities in ``[0, 1]``.

    ``data`` has shape ``(height, width, channels)`` with 1 or 3 channels. A
    2-D array is promoted to a single channel.
    """

    data: np.ndarray
    id: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise InvalidInput(f"expected (H, W, 1|3) image, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInput("empty image")
        if not np.all(np.isfinite(data)) or data.min() < 0.0 or data.max() > 1.0:
            raise InvalidInput("intensities must lie in [0, 1]")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self):
        return self.data.shape

    def replace(self, data) -> "Stimulus":
        return Stimulus(np.clip(data, 0.0, 1.0), self.id)


@dataclass(frozen=True)
class ViewingGeometry:
    """Screen size, resolution and viewing distance of an eye-tracking setup."""

    screen_width_px: float
    screen_height_px: float
    screen_width_cm: float
    screen_height_cm: float
    viewer_distance_cm: float

    def __post_init__(self):
        for name in ("screen_width_px", "screen_height_px", "screen_width_cm",
                     "screen_height_cm", "viewer_distance_cm"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameter(f"{name} must be positive, got {value}")
        ppcm_x = self.screen_width_px / self.screen_width_cm
        ppcm_y = self.screen_height_px / self.screen_height_cm
        if abs(ppcm_x - ppcm_y) > 0.05 * max(ppcm_x, ppcm_y):
            warnings.warn(
                f"anisotropic pixels: {ppcm_x:.3f} px/cm horizontally vs {ppcm_y:.3f} vertically; "
                "horizontal density is used for conversions",
                stacklevel=2,
            )

    @property
    def px_per_cm(self) -> float:
        return self.screen_width_px / self.screen_width_cm


def gaussian_kernel(sigma: float, truncation: float = DEFAULT_TRUNCATION) -> np.ndarray:
    """Sampled, normalised 1-D Gaussian of length ``2 * ceil(truncation * sigma) + 1``."""
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    if not truncation >= 1:
        raise InvalidParameter(f"truncation must be >= 1, got {truncation}")
    radius = int(math.ceil(truncation * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(a: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="symmetric")
    n = a.shape[axis]
    out = np.zeros_like(a)
    for i, w in enumerate(kernel):
        out += w * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def blur_array(a: np.ndarray, sigma: float, truncation: float = DEFAULT_TRUNCATION) -> np.ndarray:
    """Separable Gaussian blur over the first two axes of ``a``."""
    if sigma < 0:
        raise InvalidParameter(f"sigma must be >= 0, got {sigma}")
    a = np.asarray(a, dtype=np.float64)
    if sigma == 0:
        return a.copy()
    k = gaussian_kernel(sigma, truncation)
    return _correlate_axis(_correlate_axis(a, k, 0), k, 1)


def blur(stimulus: Stimulus, sigma: float, truncation: float = DEFAULT_TRUNCATION) -> Stimulus:
    """Per-channel Gaussian blur; ``sigma == 0`` returns the input unchanged."""
    if sigma < 0:
        raise InvalidParameter(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return stimulus
    return stimulus.replace(blur_array(stimulus.data, sigma, truncation))


def check_in_bounds(x: float, y: float, width: int, height: int) -> None:
    if not (0 <= x <= width and 0 <= y <= height):
        raise InvalidParameter(f"coordinate ({x}, {y}) outside {width}x{height} image")


def in_bounds(x: float, y: float, width: int, height: int) -> bool:
    return bool(0 <= x <= width and 0 <= y <= height)


def nearest_pixel(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """Column and row of the pixel centre nearest to ``(x, y)``."""
    col = min(max(int(math.floor(x + 0.5)), 0), width - 1)
    row = min(max(int(math.floor(y + 0.5)), 0), height - 1)
    return col, row


def gaussian_blob(center, sigma: float, width: int, height: int) -> np.ndarray:
    """Unnormalised Gaussian of peak 1, shape ``(height, width)``.

    The blob is centred on the pixel nearest to ``center`` so that this pixel
    takes the value 1 exactly.
    """
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    x, y = center
    check_in_bounds(x, y, width, height)
    cx, cy = nearest_pixel(x, y, width, height)
    gx = np.exp(-((np.arange(width) - cx) ** 2) / (2.0 * sigma * sigma))
    gy = np.exp(-((np.arange(height) - cy) ** 2) / (2.0 * sigma * sigma))
    return np.outer(gy, gx)


def degrees_to_pixels(deg, geom: ViewingGeometry):
    """Extent on screen, in pixels, subtending ``deg`` degrees of visual angle."""
    d = np.asarray(deg, dtype=np.float64)
    if np.any(d < 0) or np.any(d >= 90):
        raise InvalidParameter(f"visual angle must lie in [0, 90), got {deg}")
    px = 2.0 * geom.viewer_distance_cm * np.tan(np.radians(d) / 2.0) * geom.px_per_cm
    return float(px) if np.ndim(px) == 0 else px


def pixels_to_degrees(px, geom: ViewingGeometry):
    """Visual angle in degrees subtended by an on-screen extent of ``px`` pixels."""
    p = np.asarray(px, dtype=np.float64)
    if np.any(p < 0):
        raise InvalidParameter(f"pixel distance must be >= 0, got {px}")
    deg = np.degrees(2.0 * np.arctan(p / geom.px_per_cm / (2.0 * geom.viewer_distance_cm)))
    return float(deg) if np.ndim(deg) == 0 else deg


def resize_nearest(a: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbour resize of the first two axes.

    Output pixel ``i`` samples input pixel ``floor((i + 0.5) * in / out)``.
    """
    a = np.asarray(a)
    h, w = a.shape[:2]
    if (h, w) == (height, width):
        return a
    rows = np.minimum(((np.arange(height) + 0.5) * h / height).astype(int), h - 1)
    cols = np.minimum(((np.arange(width) + 0.5) * w / width).astype(int), w - 1)
    return a[rows][:, cols]


def load_stimulus(path, id: str | None = None) -> Stimulus:
    """Read a PNG/JPEG. Greyscale images get one channel, everything else RGB."""
    path = Path(path)
    with Image.open(path) as img:
        if img.mode in ("L", "LA", "I;16", "I", "F", "1"):
            arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return Stimulus(arr, path.stem if id is None else id)


def to_uint8(a: np.ndarray) -> np.ndarray:
    return np.round(np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(a, path) -> Path:
    """Write a ``[0, 1]`` image (or 2-D field) as an 8-bit PNG."""
    if isinstance(a, Stimulus):
        a = a.data
    arr = to_uint8(a)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    path = Path(path)
    Image.fromarray(arr).save(path, format="PNG")
    return path
