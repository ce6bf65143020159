"""Bottom-up saliency maps for the WTA and CLE baselines.

``center_surround_saliency`` is a deliberately small stand-in for the Itti-Koch
model: absolute differences of Gaussian blurs at a few centre/surround scales,
summed over scales and channels. It has no orientation channels and no
pyramid normalisation operator. Use ``load_external_saliency`` to plug in maps
computed by a full implementation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInput, InvalidParameter
from .imaging import Stimulus, blur_array

log = logging.getLogger(__name__)

DEFAULT_SCALES = ((1.0, 4.0), (2.0, 8.0), (4.0, 16.0))


@dataclass(frozen=True, eq=False)
class SaliencyMap:
    field: np.ndarray  # (H, W), values in [0, 1]
    source: str = "center_surround"

    @property
    def width(self) -> int:
        return self.field.shape[1]

    @property
    def height(self) -> int:
        return self.field.shape[0]

    @property
    def is_degenerate(self) -> bool:
        return not np.any(self.field > 0)


def minmax_normalize(a: np.ndarray, what: str = "saliency map") -> np.ndarray:
    """Rescale to ``[0, 1]``; a constant input becomes all zeros (with a warning)."""
    a = np.asarray(a, dtype=np.float64)
    lo, hi = a.min(), a.max()
    if not hi > lo:
        log.warning("%s is constant; normalising to all zeros", what)
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def center_surround_saliency(stimulus: Stimulus, scales=DEFAULT_SCALES) -> SaliencyMap:
    scales = [tuple(map(float, s)) for s in scales]
    if not scales:
        raise InvalidParameter("at least one (center, surround) scale is required")
    for c, s in scales:
        if not (0 < c < s):
            raise InvalidParameter(f"need 0 < center < surround, got ({c}, {s})")
    acc = np.zeros((stimulus.height, stimulus.width))
    for c, s in scales:
        acc += np.abs(blur_array(stimulus.data, c) - blur_array(stimulus.data, s)).sum(axis=2)
    # sub-1e-12 residue is floating-point noise from blurring flat regions
    if acc.max() <= 1e-12:
        acc = np.zeros_like(acc)
    return SaliencyMap(minmax_normalize(acc), "center_surround")


def uniform_saliency(width: int, height: int) -> SaliencyMap:
    return SaliencyMap(np.ones((height, width)), "uniform")


def load_external_saliency(path, width: int | None = None, height: int | None = None) -> SaliencyMap:
    """Read a greyscale saliency image and min-max normalise it.

    If ``width``/``height`` are given the file must match them.
    """
    with Image.open(Path(path)) as img:
        a = np.asarray(img.convert("L"), dtype=np.float64)
    if width is not None and height is not None and a.shape != (height, width):
        raise InvalidInput(
            f"saliency map {path} is {a.shape[1]}x{a.shape[0]}, stimulus is {width}x{height}")
    return SaliencyMap(minmax_normalize(a, f"saliency map {path}"), "external")
