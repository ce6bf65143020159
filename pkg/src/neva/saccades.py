"""Saccade amplitude distributions in degrees of visual angle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .imaging import ViewingGeometry, pixels_to_degrees

KL_EPS = 1e-10
DEFAULT_EDGES = np.arange(0.0, 31.0)  # 1 degree bins on [0, 30); last bin is open


@dataclass(frozen=True, eq=False)
class AmplitudeHistogram:
    """Normalised amplitude histogram.

    ``bin_edges`` holds the lower edge of every bin, so it is as long as
    ``probabilities``; the last bin ``[bin_edges[-1], inf)`` catches overflow.
    """

    bin_edges: np.ndarray
    probabilities: np.ndarray
    sample_count: int

    def bins(self):
        """(low, high) pairs, the overflow bin having ``high = inf``."""
        edges = list(self.bin_edges) + [np.inf]
        return list(zip(edges[:-1], edges[1:]))


def saccade_amplitudes(scanpath, geom: ViewingGeometry) -> list:
    fx = np.asarray(getattr(scanpath, "fixations", scanpath), dtype=np.float64).reshape(-1, 2)
    if len(fx) < 2:
        return []
    dist = np.hypot(*np.diff(fx, axis=0).T)
    return [float(v) for v in np.atleast_1d(pixels_to_degrees(dist, geom))]


def amplitude_histogram(amplitudes, bin_edges=DEFAULT_EDGES) -> AmplitudeHistogram:
    edges = np.asarray(bin_edges, dtype=np.float64)
    a = np.asarray(amplitudes, dtype=np.float64).ravel()
    idx = np.searchsorted(edges, a, side="right") - 1
    counts = np.bincount(np.clip(idx, 0, len(edges) - 1), minlength=len(edges)).astype(float)
    probs = counts / counts.sum() if a.size else counts
    return AmplitudeHistogram(edges, probs, int(a.size))


def kl_divergence(p: AmplitudeHistogram, q: AmplitudeHistogram) -> float:
    """``sum p_i * ln(p_i / (q_i + eps))`` over bins where ``p_i > 0``."""
    if p.bin_edges.shape != q.bin_edges.shape or not np.array_equal(p.bin_edges, q.bin_edges):
        raise InvalidInput("histograms have different bins")
    pp, qq = p.probabilities, q.probabilities
    mask = pp > 0
    return float(np.sum(pp[mask] * np.log(pp[mask] / (qq[mask] + KL_EPS))))


def modal_bin(hist: AmplitudeHistogram) -> tuple:
    """(low, high) of the most populated bin."""
    return hist.bins()[int(np.argmax(hist.probabilities))]
