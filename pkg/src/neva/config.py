"""Run configuration: a flat ``key = value`` file with dotted keys.

Example::

    # paths are relative to this file
    data.images = images
    data.fixations = fixations.csv
    geometry.screen_width_px = 1280
    geometry.screen_height_px = 1024
    geometry.screen_width_cm = 37.5
    geometry.screen_height_cm = 30
    geometry.viewer_distance_cm = 75
    foveation.sigma_p = 8
    foveation.gamma = 0.3
    generate.generators = neva_o, wta, cle, random, center
    task.model = proxy
    run.seed = 7

Command-line overrides use the same keys (``--set foveation.gamma=0.5``).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, NevaError
from .foveation import DEFAULT_FOVEA_DEG, DEFAULT_GAMMA, FoveationConfig
from .generators import GeneratorConfig
from .imaging import ViewingGeometry
from .metrics import DEFAULT_GRID, DEFAULT_LENGTH
from .saliency import DEFAULT_SCALES

GENERATORS = ("neva_o", "wta", "cle", "random", "center")


def _floats(s):
    return None if s in ("", None) else float(s)


def _list(s):
    return tuple(p.strip() for p in str(s).split(",") if p.strip())


def _scales(s):
    out = []
    for part in _list(s):
        c, _, sr = part.partition(":")
        out.append((float(c), float(sr)))
    return tuple(out)


@dataclass(frozen=True)
class RunConfig:
    images: Path | None = None
    fixations: Path | None = None
    saliency_dir: Path | None = None
    geometry: ViewingGeometry | None = None
    sigma_p: float | None = None
    sigma_xi: float | None = None
    fovea_deg: float = DEFAULT_FOVEA_DEG
    gamma: float = DEFAULT_GAMMA
    generators: tuple = GENERATORS
    n_fixations: int = DEFAULT_LENGTH
    candidate_rows: int = 16
    candidate_cols: int = 16
    inhibition_radius_deg: float = 1.0
    levy_alpha: float = 1.5
    center_sigma_frac: float = 0.2
    saliency_scales: tuple = DEFAULT_SCALES
    model: str = "proxy"
    grid: int = DEFAULT_GRID
    length: int = DEFAULT_LENGTH
    seed: int = 0
    out: Path = Path("out")
    workers: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    def foveation(self) -> FoveationConfig:
        if self.sigma_p is None:
            raise ConfigError("foveation.sigma_p is required")
        try:
            if self.sigma_xi is not None:
                return FoveationConfig(self.sigma_p, self.sigma_xi, self.gamma)
            return FoveationConfig.from_geometry(self.sigma_p, self.geometry,
                                                 self.fovea_deg, self.gamma)
        except NevaError as exc:
            raise ConfigError(str(exc)) from exc

    def generator_config(self) -> GeneratorConfig:
        try:
            return GeneratorConfig(
                n_fixations=self.n_fixations, seed=self.seed,
                candidate_grid=(self.candidate_rows, self.candidate_cols),
                inhibition_radius_deg=self.inhibition_radius_deg,
                levy_alpha=self.levy_alpha, center_sigma_frac=self.center_sigma_frac,
            )
        except NevaError as exc:
            raise ConfigError(str(exc)) from exc

    def require_geometry(self, why: str) -> ViewingGeometry:
        if self.geometry is None:
            raise ConfigError(f"viewing geometry (geometry.*) is required for {why}")
        return self.geometry


# dotted key -> (RunConfig field, parser)
KEYS = {
    "data.images": ("images", Path),
    "data.fixations": ("fixations", Path),
    "saliency.dir": ("saliency_dir", Path),
    "saliency.scales": ("saliency_scales", _scales),
    "foveation.sigma_p": ("sigma_p", _floats),
    "foveation.sigma_xi": ("sigma_xi", _floats),
    "foveation.fovea_deg": ("fovea_deg", float),
    "foveation.gamma": ("gamma", float),
    "generate.generators": ("generators", _list),
    "generate.n_fixations": ("n_fixations", int),
    "generate.candidate_rows": ("candidate_rows", int),
    "generate.candidate_cols": ("candidate_cols", int),
    "generate.inhibition_radius_deg": ("inhibition_radius_deg", float),
    "generate.levy_alpha": ("levy_alpha", float),
    "generate.center_sigma_frac": ("center_sigma_frac", float),
    "task.model": ("model", str),
    "metrics.grid": ("grid", int),
    "metrics.length": ("length", int),
    "run.seed": ("seed", int),
    "run.out": ("out", Path),
    "run.workers": ("workers", int),
}
GEOMETRY_KEYS = tuple(f"geometry.{f.name}" for f in fields(ViewingGeometry))


def parse_lines(lines) -> dict:
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {n}: expected key = value, got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def build_config(values: dict, base_dir=".") -> RunConfig:
    base_dir = Path(base_dir)
    kwargs, geom = {}, {}
    for key, value in values.items():
        if key in GEOMETRY_KEYS:
            geom[key.split(".", 1)[1]] = value
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        name, parse = KEYS[key]
        try:
            kwargs[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {value!r}") from exc
    for name in ("images", "fixations", "saliency_dir", "out"):
        if name in kwargs and not kwargs[name].is_absolute():
            kwargs[name] = base_dir / kwargs[name]
    if "model" in kwargs and not _builtin_model(kwargs["model"]):
        p = Path(kwargs["model"])
        kwargs["model"] = str(p if p.is_absolute() else base_dir / p)
    if geom:
        missing = [k for k in GEOMETRY_KEYS if k.split(".", 1)[1] not in geom]
        if missing:
            raise ConfigError(f"incomplete geometry, missing {', '.join(missing)}")
        try:
            kwargs["geometry"] = ViewingGeometry(**{k: float(v) for k, v in geom.items()})
        except (ValueError, NevaError) as exc:
            raise ConfigError(f"invalid geometry: {exc}") from exc
    cfg = RunConfig(base_dir=base_dir, **kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not 0.0 <= cfg.gamma <= 1.0:
        raise ConfigError(f"foveation.gamma must lie in [0, 1], got {cfg.gamma}")
    unknown = [g for g in cfg.generators if g not in GENERATORS]
    if unknown:
        raise ConfigError(f"unknown generator(s): {', '.join(unknown)}")
    for name in ("images", "fixations", "saliency_dir"):
        p = getattr(cfg, name)
        if p is not None and not p.exists():
            raise ConfigError(f"{name} path {p} does not exist")
    if not _builtin_model(cfg.model) and not Path(cfg.model).is_file():
        raise ConfigError(f"task model file {cfg.model} does not exist")
    if cfg.grid < 2 or cfg.length < 1:
        raise ConfigError("metrics.grid must be >= 2 and metrics.length >= 1")


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a config file (optional) and apply dotted-key overrides on top."""
    values, base = {}, Path(".")
    if path is not None:
        path = Path(path)
        try:
            values = parse_lines(path.read_text().splitlines())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        base = path.parent
    for key, value in (overrides or {}).items():
        # override paths are relative to the working directory, not the file
        if key in PATH_KEYS and value and not (key == "task.model" and _builtin_model(value)):
            value = str(Path(value).absolute())
        values[key] = value
    return build_config(values, base)


PATH_KEYS = ("data.images", "data.fixations", "saliency.dir", "run.out", "task.model")


def _builtin_model(name: str) -> bool:
    return name == "proxy" or name.startswith("bright_")


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **changes)


def stable_key(s: str) -> int:
    return int.from_bytes(hashlib.sha256(s.encode()).digest()[:8], "little")


def rng_for(seed: int, *labels: str) -> np.random.Generator:
    """Independent Philox stream for ``(seed, labels...)``, e.g. one per
    (generator, stimulus), regardless of iteration order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stable_key(l) for l in labels))
    return np.random.Generator(np.random.Philox(ss))
