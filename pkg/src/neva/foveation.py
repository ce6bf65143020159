"""Foveated perception and the cumulative agent state.

A fixation at ``xi`` is perceived as a blend of the sharp image and its
blurred "gist" weighted by a Gaussian blob centred on ``xi``::

    perceived = blob * S + (1 - blob) * S_coarse

The agent state accumulates blobs over time with forgetting ``gamma``::

    acc(t) = clip(blob(t) + (1 - gamma) * acc(t - 1), 0, 1)
    h(t)   = acc(t) * S + (1 - acc(t)) * S_coarse

``gamma = 1`` forgets everything between fixations; ``gamma = 0`` never
forgets. Note the weights on past blobs are ``(1 - gamma) ** i``: unrolling
the recursion with ``gamma ** i`` would invert the meaning of the forgetting
coefficient.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .imaging import Stimulus, ViewingGeometry, blur, degrees_to_pixels, gaussian_blob

DEFAULT_GAMMA = 0.3
DEFAULT_FOVEA_DEG = 2.0
DEFAULT_SIGMA_XI_PX = 32.0


@dataclass(frozen=True)
class FoveationConfig:
    sigma_p: float
    sigma_xi: float
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not self.sigma_p > 0:
            raise InvalidParameter(f"sigma_p must be positive, got {self.sigma_p}")
        if not self.sigma_xi > 0:
            raise InvalidParameter(f"sigma_xi must be positive, got {self.sigma_xi}")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameter(f"gamma must lie in [0, 1], got {self.gamma}")

    @classmethod
    def from_geometry(cls, sigma_p: float, geom: ViewingGeometry | None = None,
                      fovea_deg: float = DEFAULT_FOVEA_DEG, gamma: float = DEFAULT_GAMMA):
        """Derive the fovea radius from visual angle.

        Without a geometry the fovea falls back to 32 px and a warning is issued.
        """
        if geom is None:
            warnings.warn(
                f"no viewing geometry given; using sigma_xi = {DEFAULT_SIGMA_XI_PX} px",
                stacklevel=2,
            )
            sigma_xi = DEFAULT_SIGMA_XI_PX
        else:
            sigma_xi = degrees_to_pixels(fovea_deg, geom)
        return cls(sigma_p=sigma_p, sigma_xi=sigma_xi, gamma=gamma)


@dataclass(frozen=True, eq=False)
class FoveationState:
    g_sigma: np.ndarray  # accumulator, shape (H, W), values in [0, 1]
    coarse: Stimulus
    t: int = 0


def _blend(mask: np.ndarray, sharp: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    m = mask[:, :, None]
    return m * sharp + (1.0 - m) * coarse


def perceive(stimulus: Stimulus, fixation, config: FoveationConfig,
             coarse: Stimulus | None = None) -> Stimulus:
    """Foveated rendering of ``stimulus`` around ``fixation``.

    ``coarse`` may be passed to reuse an already blurred copy.
    """
    blob = gaussian_blob(fixation, config.sigma_xi, stimulus.width, stimulus.height)
    if coarse is None:
        coarse = blur(stimulus, config.sigma_p)
    return stimulus.replace(_blend(blob, stimulus.data, coarse.data))


def init_state(stimulus: Stimulus, config: FoveationConfig) -> FoveationState:
    g = np.zeros((stimulus.height, stimulus.width))
    g.flags.writeable = False
    return FoveationState(g_sigma=g, coarse=blur(stimulus, config.sigma_p), t=0)


def update_state(state: FoveationState, fixation, config: FoveationConfig) -> FoveationState:
    h, w = state.g_sigma.shape
    blob = gaussian_blob(fixation, config.sigma_xi, w, h)
    g = np.clip(blob + (1.0 - config.gamma) * state.g_sigma, 0.0, 1.0)
    g.flags.writeable = False
    return FoveationState(g_sigma=g, coarse=state.coarse, t=state.t + 1)


def agent_state(state: FoveationState, stimulus: Stimulus) -> Stimulus:
    """Cumulative perceived image: sharp where the accumulator is 1, gist where 0."""
    if state.coarse.shape != stimulus.shape:
        raise InvalidParameter(
            f"state built for {state.coarse.shape}, stimulus has {stimulus.shape}")
    return stimulus.replace(_blend(state.g_sigma, stimulus.data, state.coarse.data))


def run_fixations(stimulus: Stimulus, fixations, config: FoveationConfig) -> FoveationState:
    """Fold ``update_state`` over a fixation sequence starting from ``init_state``."""
    state = init_state(stimulus, config)
    for fx in fixations:
        state = update_state(state, fx, config)
    return state
