"""Scanpath generators: task-driven NeVA-O and the classic baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InvalidInput, InvalidParameter
from .foveation import FoveationConfig, agent_state, init_state, update_state
from .imaging import Stimulus, ViewingGeometry, degrees_to_pixels, in_bounds
from .saliency import SaliencyMap
from .task_models import TaskLossModel, task_loss

CLE_EPS = 1e-6
CLE_MAX_TRIES = 50


@dataclass(frozen=True)
class Scanpath:
    stimulus_id: str
    fixations: tuple  # ((x, y), ...)

    def __post_init__(self):
        fx = tuple((float(x), float(y)) for x, y in self.fixations)
        if not fx:
            raise InvalidInput("a scanpath needs at least one fixation")
        object.__setattr__(self, "fixations", fx)

    def __len__(self):
        return len(self.fixations)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.fixations, dtype=np.float64).reshape(-1, 2)

    def truncated(self, n: int) -> "Scanpath":
        return Scanpath(self.stimulus_id, self.fixations[:n])

    def check_bounds(self, width: int, height: int) -> None:
        for i, (x, y) in enumerate(self.fixations):
            if not in_bounds(x, y, width, height):
                raise InvalidInput(f"fixation {i} ({x}, {y}) outside {width}x{height}")


@dataclass(frozen=True)
class GeneratorConfig:
    n_fixations: int = 10
    seed: int = 0
    candidate_grid: tuple = (16, 16)  # (rows, cols)
    inhibition_radius_deg: float = 1.0
    levy_alpha: float = 1.5
    center_sigma_frac: float = 0.2

    def __post_init__(self):
        if self.n_fixations < 1:
            raise InvalidParameter("n_fixations must be >= 1")
        rows, cols = self.candidate_grid
        if rows < 2 or cols < 2:
            raise InvalidParameter(f"candidate grid must be at least 2x2, got {rows}x{cols}")
        if not self.levy_alpha > 0:
            raise InvalidParameter("levy_alpha must be positive")
        if not self.center_sigma_frac > 0:
            raise InvalidParameter("center_sigma_frac must be positive")
        if not self.inhibition_radius_deg >= 0:
            raise InvalidParameter("inhibition_radius_deg must be >= 0")


# -- NeVA-O ------------------------------------------------------------------


def candidate_grid(width: int, height: int, rows: int, cols: int) -> list:
    """Evenly spaced candidate fixations at cell centres, row-major order."""
    xs = [int((j + 0.5) * width / cols) for j in range(cols)]
    ys = [int((i + 0.5) * height / rows) for i in range(rows)]
    return [(x, y) for y in ys for x in xs]


def candidate_losses(stimulus, state, model, fcfg, candidates) -> np.ndarray:
    """Task loss of the agent state obtained by fixating each candidate next."""
    return np.array([
        task_loss(model, agent_state(update_state(state, c, fcfg), stimulus), stimulus)
        for c in candidates
    ])


@dataclass
class NevaTrace:
    """Per-step record of a NeVA-O run."""

    candidates: list
    losses: list = field(default_factory=list)  # one array per step
    chosen: list = field(default_factory=list)  # candidate index per step


def neva_o(stimulus: Stimulus, model: TaskLossModel, fcfg: FoveationConfig,
           gcfg: GeneratorConfig, trace: bool = False):
    """Greedy task-driven scanpath.

    Each step fixates the grid candidate whose resulting agent state yields the
    lowest task loss (ties go to the lowest row-major index). The first step
    starts from the fully blurred stimulus. With ``trace=True`` returns
    ``(scanpath, NevaTrace)``.
    """
    candidates = candidate_grid(stimulus.width, stimulus.height, *gcfg.candidate_grid)
    record = NevaTrace(candidates)
    state = init_state(stimulus, fcfg)
    fixations = []
    for step in range(gcfg.n_fixations):
        try:
            losses = candidate_losses(stimulus, state, model, fcfg, candidates)
        except Exception as exc:
            raise GenerationError(f"task model evaluation failed: {exc}", step=step) from exc
        if not np.all(np.isfinite(losses)):
            raise GenerationError("task model returned a non-finite loss", step=step)
        best = int(np.argmin(losses))
        fixations.append(candidates[best])
        state = update_state(state, candidates[best], fcfg)
        record.losses.append(losses)
        record.chosen.append(best)
    path = Scanpath(stimulus.id, fixations)
    return (path, record) if trace else path


# -- winner-take-all -----------------------------------------------------------


def wta(saliency: SaliencyMap, geom: ViewingGeometry, gcfg: GeneratorConfig,
        stimulus_id: str = "") -> Scanpath:
    """Winner-take-all with inhibition of return.

    After each fixation the saliency within ``inhibition_radius_deg`` of it is
    cancelled. Once no salient location is left, the original map is restored,
    inhibited only around the latest fixation, so sparse maps still yield
    ``n_fixations`` fixations.
    """
    s0 = np.asarray(saliency.field, dtype=np.float64)
    if not np.any(s0 > 0):
        raise GenerationError("degenerate saliency", step=0)
    radius = degrees_to_pixels(gcfg.inhibition_radius_deg, geom)
    h, w = s0.shape
    yy, xx = np.mgrid[0:h, 0:w]

    def inhibit(s, x, y):
        # below any saliency value, so inhibited pixels are never picked
        s[(xx - x) ** 2 + (yy - y) ** 2 <= radius * radius] = -1.0

    s = s0.copy()
    fixations = []
    for _ in range(gcfg.n_fixations):
        if not np.any(s > 0):
            s = s0.copy()
            inhibit(s, *fixations[-1])
            if np.all(s < 0):
                raise GenerationError("inhibition disk covers the whole map",
                                      step=len(fixations))
        row, col = divmod(int(np.argmax(s)), w)
        fixations.append((col, row))
        inhibit(s, col, row)
    return Scanpath(stimulus_id, fixations)


# -- constrained Levy exploration ---------------------------------------------


def levy_jump_lengths(rng: np.random.Generator, alpha: float, size=None):
    """Pareto(alpha) jump lengths with minimum 1 px, by inverse transform."""
    u = rng.random(size)
    return (1.0 - u) ** (-1.0 / alpha)


def cle_levy(saliency: SaliencyMap, gcfg: GeneratorConfig, rng: np.random.Generator,
             stimulus_id: str = "", start=None) -> Scanpath:
    """Levy-flight walk with Metropolis acceptance on saliency.

    The walk starts at ``start`` or, by default, at a pixel drawn with
    probability proportional to saliency (uniformly if the map is all zero).
    Each move proposes a jump with uniform direction and Pareto length, clamped
    to the image, accepted with probability ``min(1, (s_new + eps) / (s_cur + eps))``.
    After 50 rejected proposals the most salient location seen, the current
    one included, is taken.
    """
    s = np.asarray(saliency.field, dtype=np.float64)
    h, w = s.shape

    def sal(p):
        col = min(max(int(math.floor(p[0] + 0.5)), 0), w - 1)
        row = min(max(int(math.floor(p[1] + 0.5)), 0), h - 1)
        return s[row, col]

    if start is None:
        weights = s.ravel()
        total = weights.sum()
        probs = weights / total if total > 0 else None
        row, col = divmod(int(rng.choice(weights.size, p=probs)), w)
        cur = (float(col), float(row))
    else:
        cur = (float(start[0]), float(start[1]))
    fixations = [cur]
    while len(fixations) < gcfg.n_fixations:
        best, best_s = cur, sal(cur)
        s_cur = best_s
        nxt = None
        for _ in range(CLE_MAX_TRIES):
            length = levy_jump_lengths(rng, gcfg.levy_alpha)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            cand = (min(max(cur[0] + length * math.cos(theta), 0.0), w - 1.0),
                    min(max(cur[1] + length * math.sin(theta), 0.0), h - 1.0))
            s_new = sal(cand)
            if rng.random() < min(1.0, (s_new + CLE_EPS) / (s_cur + CLE_EPS)):
                nxt = cand
                break
            if s_new > best_s:
                best, best_s = cand, s_new
        cur = best if nxt is None else nxt
        fixations.append(cur)
    return Scanpath(stimulus_id, fixations)


# -- statistical baselines -----------------------------------------------------


def random_baseline(width: int, height: int, gcfg: GeneratorConfig, rng: np.random.Generator,
                    stimulus_id: str = "") -> Scanpath:
    """I.i.d. uniformly drawn pixels."""
    xs = rng.integers(0, width, size=gcfg.n_fixations)
    ys = rng.integers(0, height, size=gcfg.n_fixations)
    return Scanpath(stimulus_id, list(zip(xs.tolist(), ys.tolist())))


def center_baseline(width: int, height: int, gcfg: GeneratorConfig, rng: np.random.Generator,
                    stimulus_id: str = "") -> Scanpath:
    """I.i.d. isotropic Gaussian samples around the image centre.

    ``sigma = center_sigma_frac * min(width, height)``; samples falling outside
    the pixel grid are redrawn.
    """
    sigma = gcfg.center_sigma_frac * min(width, height)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    out = []
    while len(out) < gcfg.n_fixations:
        x, y = rng.normal(cx, sigma), rng.normal(cy, sigma)
        if 0 <= x <= width - 1 and 0 <= y <= height - 1:
            out.append((x, y))
    return Scanpath(stimulus_id, out)
