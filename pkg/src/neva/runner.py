"""Orchestration behind the command-line tool.

Every function takes a ``RunConfig`` and writes plain CSV/JSON/PNG files into
``cfg.out``. Outputs depend only on the configuration, the inputs and the seed:
each (generator, stimulus) pair draws from its own random stream.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .config import RunConfig, rng_for
from .dataset import Dataset, load_dataset, read_scanpaths, write_scanpaths
from .errors import ConfigError, GenerationError, InvalidInput
from .foveation import FoveationConfig, agent_state, perceive, run_fixations
from .generators import (Scanpath, center_baseline, cle_levy, neva_o, random_baseline,
                         wta)
from .imaging import Stimulus, load_stimulus, save_png, to_uint8
from .metrics import (SCORE_NAMES, GridQuantizer, evaluate_generator, human_baseline, n_score,
                      quantize)
from .saccades import amplitude_histogram, kl_divergence, modal_bin, saccade_amplitudes
from .saliency import center_surround_saliency, load_external_saliency
from .task_models import TaskLossModel, bright_side_classifier, load_model

log = logging.getLogger(__name__)

SCANPATH_PREFIX = "scanpaths_"
HUMAN = "human"


def load_task_model(spec: str) -> TaskLossModel:
    if spec == "proxy":
        return TaskLossModel("reconstruction_proxy", name="proxy")
    if spec in ("bright_left", "bright_right"):
        return bright_side_classifier(spec.split("_", 1)[1])
    return load_model(spec)


def load_config_dataset(cfg: RunConfig, with_fixations: bool = True) -> Dataset:
    if cfg.images is None:
        raise ConfigError("data.images is required")
    fixations = cfg.fixations if with_fixations else None
    if with_fixations and fixations is None:
        raise ConfigError("data.fixations is required")
    return load_dataset(cfg.images, fixations, cfg.geometry, min_fixations=cfg.length)


def _saliency(cfg: RunConfig, stimulus: Stimulus):
    if cfg.saliency_dir is not None:
        for suffix in (".png", ".jpg", ".jpeg"):
            p = Path(cfg.saliency_dir) / f"{stimulus.id}{suffix}"
            if p.is_file():
                return load_external_saliency(p, stimulus.width, stimulus.height)
    return center_surround_saliency(stimulus, cfg.saliency_scales)


def generate_one(name: str, stimulus: Stimulus, cfg: RunConfig, model=None) -> Scanpath:
    gcfg = cfg.generator_config()
    sid = stimulus.id
    if name == "neva_o":
        return neva_o(stimulus, model, cfg.foveation(), gcfg)
    if name == "wta":
        return wta(_saliency(cfg, stimulus), cfg.require_geometry("WTA"), gcfg, sid)
    rng = rng_for(cfg.seed, name, sid)
    if name == "cle":
        return cle_levy(_saliency(cfg, stimulus), gcfg, rng, sid)
    if name == "random":
        return random_baseline(stimulus.width, stimulus.height, gcfg, rng, sid)
    if name == "center":
        return center_baseline(stimulus.width, stimulus.height, gcfg, rng, sid)
    raise ConfigError(f"unknown generator {name!r}")


def _map(cfg: RunConfig, fn, items):
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def run_generate(cfg: RunConfig, dataset: Dataset | None = None) -> dict:
    """Generate scanpaths for every stimulus with every configured generator.

    Returns ``{generator: csv path}``. Generation errors are logged, written to
    ``generation_errors.csv`` and do not stop the run.
    """
    if dataset is None:
        dataset = load_config_dataset(cfg, with_fixations=False)
    if "neva_o" in cfg.generators:
        cfg.foveation()
    if "wta" in cfg.generators:
        cfg.require_geometry("WTA")
    model = load_task_model(cfg.model) if "neva_o" in cfg.generators else None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = sorted(dataset.stimuli)
    errors, written = [], {}
    for name in cfg.generators:
        def one(sid, name=name):
            stim = load_stimulus(dataset.stimuli[sid], sid)
            try:
                return generate_one(name, stim, cfg, model), None
            except GenerationError as exc:
                return None, str(exc)

        results = _map(cfg, one, ids)
        paths = []
        for sid, (sp, err) in zip(ids, results):
            if err is not None:
                log.error("%s failed on %s: %s", name, sid, err)
                errors.append((name, sid, err))
            else:
                paths.append(sp)
        written[name] = write_scanpaths(paths, out / f"{SCANPATH_PREFIX}{name}.csv")
    err_file = out / "generation_errors.csv"
    if errors:
        with err_file.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["generator", "stimulus_id", "message"])
            w.writerows(errors)
    elif err_file.exists():
        err_file.unlink()
    return written


def read_generated(directory) -> dict:
    """``{generator: {stimulus id: Scanpath}}`` from a ``generate`` output dir."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidInput(f"no generated scanpaths at {directory}")
    found = {}
    for p in sorted(directory.glob(f"{SCANPATH_PREFIX}*.csv")):
        found[p.stem[len(SCANPATH_PREFIX):]] = read_scanpaths(p)
    return found


def _strings(scanpaths: dict, sizes: dict, grid: int, length: int, label: str) -> dict:
    out = {}
    for sid, sp in scanpaths.items():
        if sid not in sizes:
            continue
        if len(sp) < length:
            log.warning("%s scanpath on %s has %d fixations (< %d); skipped",
                        label, sid, len(sp), length)
            continue
        w, h = sizes[sid]
        out[sid] = quantize(sp.truncated(length), GridQuantizer(grid, w, h))
    return out


def _jsonable(a):
    return [None if not math.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]


def run_evaluate(cfg: RunConfig, generated: dict, dataset: Dataset) -> dict:
    """Score generated scanpaths against human ones; writes ``report.json``
    and ``report_k.csv``. Returns the report dictionary.

    Random scanpaths are produced on the fly when ``generated`` lacks them, so
    N-scores are always defined relative to this run's random and human rows.
    """
    N, n = cfg.length, cfg.grid
    humans = dataset.human_scanpaths(N)
    human_str = {
        sid: {subj: quantize(sp, GridQuantizer(n, *dataset.sizes[sid]))
              for subj, sp in subs.items()}
        for sid, subs in sorted(humans.items())
    }
    generated = dict(generated)
    if "random" not in generated:
        gcfg = replace(cfg.generator_config(), n_fixations=N)
        generated["random"] = {
            sid: random_baseline(*dataset.sizes[sid], gcfg, rng_for(cfg.seed, "random", sid), sid)
            for sid in sorted(human_str)
        }
    shared = set(human_str) & set().union(*(set(v) for v in generated.values()))
    if not shared:
        raise InvalidInput("generated scanpaths and human data share no stimuli")

    scores, per_stim = {}, {}
    for name in sorted(generated):
        strings = _strings(generated[name], dataset.sizes, n, N, name)
        try:
            res = evaluate_generator(strings, human_str)
        except InvalidInput as exc:
            log.warning("generator %s not evaluated: %s", name, exc)
            continue
        scores[name] = res
        per_stim[name] = {
            sid: {"subjects": sorted(human_str[sid]),
                  "sed": tabs[0].tolist(), "sbtde": tabs[1].tolist()}
            for sid, tabs in sorted(res.per_stimulus.items())
        }
    scores[HUMAN] = human_baseline(human_str)

    report = {"grid": n, "length": N, "stimuli": sorted(shared), "generators": {},
              "per_stimulus": per_stim}
    rnd, hum = scores["random"], scores[HUMAN]
    for name in sorted(scores):
        entry = {}
        for key in SCORE_NAMES:
            entry[key] = _jsonable(getattr(scores[name], key))
            entry[f"n_{key}"] = _jsonable(
                n_score(getattr(scores[name], key), getattr(hum, key), getattr(rnd, key)))
        report["generators"][name] = entry

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True))
    cols = list(SCORE_NAMES) + [f"n_{k}" for k in SCORE_NAMES]
    with (out / "report_k.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "generator"] + cols)
        for k in range(N):
            for name in sorted(report["generators"]):
                e = report["generators"][name]
                w.writerow([k + 1, name] + ["" if e[c][k] is None else repr(e[c][k]) for c in cols])
    return report


def run_saccades(cfg: RunConfig, generated: dict, dataset: Dataset) -> dict:
    """Amplitude histograms per generator (and humans) plus a KL matrix.

    Writes ``saccades_<name>.csv`` and ``kl_matrix.csv`` where entry
    (row, col) is KL(row || col). Returns ``{name: AmplitudeHistogram}``.
    """
    geom = cfg.require_geometry("saccade amplitudes")
    hists = {}
    human_amps = [a for subs in dataset.human_scanpaths(cfg.length).values()
                  for sp in subs.values() for a in saccade_amplitudes(sp, geom)]
    if human_amps:
        hists[HUMAN] = amplitude_histogram(human_amps)
        lo, hi = modal_bin(hists[HUMAN])
        log.info("human modal saccade amplitude bin: [%g, %g) deg", lo, hi)
    for name in sorted(generated):
        amps = [a for sp in generated[name].values()
                for a in saccade_amplitudes(sp.truncated(cfg.length), geom)]
        hists[name] = amplitude_histogram(amps)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, h in hists.items():
        with (out / f"saccades_{name}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_low", "bin_high", "probability"])
            for (lo, hi), p in zip(h.bins(), h.probabilities):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(p))])
    names = sorted(hists, key=lambda s: (s != HUMAN, s))
    with (out / "kl_matrix.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generator"] + names)
        for a in names:
            w.writerow([a] + [repr(kl_divergence(hists[a], hists[b])) for b in names])
    return hists


def render_overlay(stimulus: Stimulus, scanpath: Scanpath, fcfg: FoveationConfig,
                   out_dir, prefix: str = "") -> dict:
    """Write the fixation sequence, the accumulator heatmap and the final agent
    state as PNGs. Returns their paths and the drawn markers."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = run_fixations(stimulus, scanpath.fixations, fcfg)
    h = agent_state(state, stimulus)

    base = Image.fromarray(to_uint8(stimulus.data if stimulus.channels == 3
                                    else np.repeat(stimulus.data, 3, axis=2)))
    draw = ImageDraw.Draw(base)
    r = max(3, min(stimulus.width, stimulus.height) // 40)
    markers = []
    pts = [tuple(p) for p in scanpath.fixations]
    if len(pts) > 1:
        draw.line(pts, fill=(255, 255, 0), width=1)
    for i, (x, y) in enumerate(pts, 1):
        draw.ellipse([x - r, y - r, x + r, y + r], outline=(255, 0, 0), width=2)
        draw.text((x + r + 1, y - r), str(i), fill=(255, 0, 0))
        markers.append((i, x, y))
    paths = {
        "fixations": out_dir / f"{prefix}fixations.png",
        "heatmap": out_dir / f"{prefix}heatmap.png",
        "agent_state": out_dir / f"{prefix}agent_state.png",
    }
    base.save(paths["fixations"], format="PNG")
    save_png(state.g_sigma, paths["heatmap"])
    save_png(h, paths["agent_state"])
    return {**paths, "markers": markers, "state": state}


def run_foveate(cfg: RunConfig, image, fixations) -> dict:
    """Render the perceived image for each fixation plus the overlay triple."""
    stim = load_stimulus(image)
    fcfg = cfg.foveation()
    sp = Scanpath(stim.id, fixations)
    sp.check_bounds(stim.width, stim.height)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    coarse = run_fixations(stim, [], fcfg).coarse
    perceived = [save_png(perceive(stim, fx, fcfg, coarse), out / f"perceived_{i:02d}.png")
                 for i, fx in enumerate(sp.fixations, 1)]
    res = render_overlay(stim, sp, fcfg, out)
    res["perceived"] = perceived
    return res


def gamma_sweep(cfg: RunConfig, gammas, dataset: Dataset | None = None) -> dict:
    """Run NeVA-O for each forgetting coefficient into ``out/gamma_<g>``;
    evaluates against humans when the dataset has fixations."""
    results = {}
    for g in gammas:
        sub = replace(cfg, gamma=float(g), generators=("neva_o",),
                      out=Path(cfg.out) / f"gamma_{float(g):.2f}")
        run_generate(sub, dataset)
        if dataset is not None and dataset.fixations:
            results[float(g)] = run_evaluate(sub, read_generated(sub.out), dataset)
        else:
            results[float(g)] = None
    return results
