"""String-based scanpath similarity: SED, SBTDE, aggregation and normalisation.

Scanpaths are turned into strings by quantising fixations onto an ``n x n``
grid of regions; symbols are region indices ``col + n * row``. All distances
are "lower is more similar".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInput

log = logging.getLogger(__name__)

DEFAULT_GRID = 5
DEFAULT_LENGTH = 10


@dataclass(frozen=True)
class GridQuantizer:
    n: int
    width: float
    height: float

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInput(f"grid side must be >= 2, got {self.n}")
        if not (self.width > 0 and self.height > 0):
            raise InvalidInput("image dimensions must be positive")

    def region(self, x: float, y: float) -> int:
        if not (0 <= x <= self.width and 0 <= y <= self.height):
            raise InvalidInput(f"fixation ({x}, {y}) outside {self.width}x{self.height}")
        col = min(int(math.floor(x * self.n / self.width)), self.n - 1)
        row = min(int(math.floor(y * self.n / self.height)), self.n - 1)
        return col + self.n * row


def quantize(scanpath, q: GridQuantizer) -> tuple:
    """Region index of every fixation, in order."""
    fixations = getattr(scanpath, "fixations", scanpath)
    return tuple(q.region(x, y) for x, y in fixations)


def _levenshtein(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def sed(a: Sequence, b: Sequence) -> int:
    """String-edit (Levenshtein) distance between equal-length strings."""
    if len(a) != len(b):
        raise InvalidInput(f"SED needs equal lengths, got {len(a)} and {len(b)}")
    return _levenshtein(a, b)


def sbtde_k(a: Sequence, b: Sequence, k: int) -> float:
    """Average over the length-``k`` windows of ``a`` of the minimum
    ``sed / k`` to any length-``k`` window of ``b``.

    Both strings have length ``N``; there are ``N - k + 1`` windows each. The
    result lies in ``[0, 1]`` and is not symmetric in ``a`` and ``b``.
    """
    n = len(a)
    if len(b) != n:
        raise InvalidInput(f"SBTDE needs equal lengths, got {n} and {len(b)}")
    if not 1 <= k <= n:
        raise InvalidInput(f"need 1 <= k <= {n}, got k={k}")
    wa = [tuple(a[i:i + k]) for i in range(n - k + 1)]
    wb = {tuple(b[i:i + k]) for i in range(n - k + 1)}
    total = 0
    for x in wa:
        if x in wb:
            continue
        total += min(_levenshtein(x, y) for y in wb)
    return total / (k * len(wa))


def sbtde_all(a: Sequence, b: Sequence) -> np.ndarray:
    """``sbtde_k`` for every ``k = 1 .. N``."""
    return np.array([sbtde_k(a, b, k) for k in range(1, len(a) + 1)])


def sed_prefixes(a: Sequence, b: Sequence) -> np.ndarray:
    """SED between the first ``k`` symbols of each string, ``k = 1 .. N``."""
    if len(a) != len(b):
        raise InvalidInput(f"SED needs equal lengths, got {len(a)} and {len(b)}")
    return np.array([_levenshtein(a[:k], b[:k]) for k in range(1, len(a) + 1)], dtype=float)


def _per_stimulus(scores) -> list:
    groups = list(scores.values()) if isinstance(scores, Mapping) else list(scores)
    if not groups:
        raise InvalidInput("no stimuli to aggregate")
    out = []
    for g in groups:
        arr = np.asarray(g, dtype=np.float64)
        if arr.size == 0 or arr.shape[0] == 0:
            raise InvalidInput("a stimulus has no human scores")
        out.append(arr)
    return out


def aggregate_mean(per_subject_scores):
    """Mean over subjects per stimulus, then mean over stimuli.

    Accepts a mapping or sequence with one entry per stimulus, each a sequence
    of per-subject scores (scalars or equal-length arrays, e.g. one value per k).
    """
    groups = _per_stimulus(per_subject_scores)
    res = np.mean([g.mean(axis=0) for g in groups], axis=0)
    return float(res) if np.ndim(res) == 0 else res


def aggregate_spp(per_subject_scores):
    """Best (minimum) subject per stimulus, then mean over stimuli."""
    groups = _per_stimulus(per_subject_scores)
    res = np.mean([g.min(axis=0) for g in groups], axis=0)
    return float(res) if np.ndim(res) == 0 else res


def n_score(model_score, human_score, random_score):
    """Normalise so the human baseline maps to 0 and the random baseline to 1.

    Where the denominator is zero the result is NaN. Zero is returned as +0.0.
    """
    m, h, r = (np.asarray(v, dtype=np.float64) for v in (model_score, human_score, random_score))
    denom = r - h
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.where(denom != 0, (m - h) / np.where(denom != 0, denom, 1.0), np.nan) + 0.0
    return float(res) if res.ndim == 0 else res


# -- pairwise tables -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairScores:
    """Per-k SED (prefix) and SBTDE between one scanpath and one reference."""

    sed: np.ndarray
    sbtde: np.ndarray


def compare_strings(a: Sequence, b: Sequence) -> PairScores:
    return PairScores(sed_prefixes(a, b), sbtde_all(a, b))


def score_against(candidate: Sequence, references: Sequence) -> tuple:
    """Stacked SED and SBTDE arrays of shape ``(n_refs, N)``."""
    pairs = [compare_strings(candidate, r) for r in references]
    return (np.stack([p.sed for p in pairs]), np.stack([p.sbtde for p in pairs]))


SCORE_NAMES = ("mean_sed", "spp_sed", "mean_sbtde", "spp_sbtde")


@dataclass
class BaselineScores:
    """Per-k aggregate scores; ``per_stimulus`` optionally keeps the raw
    ``(sed, sbtde)`` tables of shape ``(n_subjects, N)`` per stimulus."""

    mean_sed: np.ndarray
    spp_sed: np.ndarray
    mean_sbtde: np.ndarray
    spp_sbtde: np.ndarray
    per_stimulus: dict | None = None

    def as_dict(self) -> dict:
        return {k: np.asarray(getattr(self, k)).tolist() for k in SCORE_NAMES}


def evaluate_generator(generated: Mapping, humans: Mapping) -> BaselineScores:
    """Mean and SPP scores of generated strings against all human strings.

    ``generated`` maps stimulus id to one string; ``humans`` maps stimulus id to
    a mapping (or sequence) of subject strings. Only shared stimuli count.
    """
    ids = sorted(set(generated) & set(humans))
    if not ids:
        raise InvalidInput("generated and human scanpaths share no stimuli")
    sed_tab, tde_tab = {}, {}
    for sid in ids:
        refs = humans[sid]
        refs = list(refs.values()) if isinstance(refs, Mapping) else list(refs)
        if not refs:
            log.warning("stimulus %s has no human scanpaths; skipped", sid)
            continue
        sed_tab[sid], tde_tab[sid] = score_against(generated[sid], refs)
    return BaselineScores(aggregate_mean(sed_tab), aggregate_spp(sed_tab),
                          aggregate_mean(tde_tab), aggregate_spp(tde_tab),
                          per_stimulus={sid: (sed_tab[sid], tde_tab[sid]) for sid in sed_tab})


def human_baseline(humans: Mapping) -> BaselineScores:
    """Leave-one-out agreement among human subjects.

    Each subject is scored against the remaining ones (mean and best match);
    those values are averaged over subjects, then over stimuli. Stimuli with
    fewer than two subjects are skipped.
    """
    per_stim = {"mean_sed": [], "spp_sed": [], "mean_sbtde": [], "spp_sbtde": []}
    for sid in sorted(humans):
        subjects = humans[sid]
        strings = list(subjects.values()) if isinstance(subjects, Mapping) else list(subjects)
        if len(strings) < 2:
            log.warning("stimulus %s has %d subject(s); skipped in human baseline",
                        sid, len(strings))
            continue
        rows = {k: [] for k in per_stim}
        for i, s in enumerate(strings):
            sed_arr, tde_arr = score_against(s, strings[:i] + strings[i + 1:])
            rows["mean_sed"].append(sed_arr.mean(axis=0))
            rows["spp_sed"].append(sed_arr.min(axis=0))
            rows["mean_sbtde"].append(tde_arr.mean(axis=0))
            rows["spp_sbtde"].append(tde_arr.min(axis=0))
        for k in per_stim:
            per_stim[k].append(np.mean(rows[k], axis=0))
    if not per_stim["mean_sed"]:
        raise InvalidInput("no stimulus has at least two human subjects")
    return BaselineScores(**{k: np.mean(v, axis=0) for k, v in per_stim.items()})
