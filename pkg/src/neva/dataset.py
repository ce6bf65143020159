"""Eye-tracking dataset ingestion.

Human fixations come as one CSV with the header columns
``stimulus_id, subject_id, fixation_index, x_px, y_px`` (extra columns are
ignored). Stimuli are image files in one directory whose stem is the
stimulus id.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .errors import ConfigError, InvalidInput
from .generators import Scanpath
from .imaging import ViewingGeometry, in_bounds

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("stimulus_id", "subject_id", "fixation_index", "x_px", "y_px")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
MIN_FIXATIONS = 10


@dataclass
class Dataset:
    stimuli: dict  # stimulus id -> image path
    sizes: dict  # stimulus id -> (width, height)
    fixations: dict = field(default_factory=dict)  # (stimulus id, subject id) -> [(x, y), ...]
    geometry: ViewingGeometry | None = None
    min_fixations: int = MIN_FIXATIONS

    def subjects(self, stimulus_id: str) -> list:
        return sorted(subj for sid, subj in self.fixations if sid == stimulus_id)

    def human_scanpaths(self, n: int | None = None) -> dict:
        """stimulus id -> {subject id: Scanpath}, keeping subjects with at least
        ``n`` (default ``min_fixations``) fixations, truncated to ``n``."""
        n = self.min_fixations if n is None else n
        out = defaultdict(dict)
        for (sid, subj), fx in sorted(self.fixations.items()):
            if len(fx) >= n:
                out[sid][subj] = Scanpath(sid, fx[:n])
        return dict(out)


def find_images(images_dir) -> dict:
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise ConfigError(f"image directory {images_dir} does not exist")
    found = {}
    for p in sorted(images_dir.iterdir()):
        if p.suffix.lower() in IMAGE_SUFFIXES and p.stem not in found:
            found[p.stem] = p
    return found


def image_size(path) -> tuple:
    with Image.open(path) as img:
        return img.size


def load_dataset(images_dir, fixations_csv=None, geometry: ViewingGeometry | None = None,
                 min_fixations: int = MIN_FIXATIONS) -> Dataset:
    stimuli = find_images(images_dir)
    sizes = {sid: image_size(p) for sid, p in stimuli.items()}
    ds = Dataset(stimuli, sizes, geometry=geometry, min_fixations=min_fixations)
    if fixations_csv is None:
        return ds
    path = Path(fixations_csv)
    if not path.is_file():
        raise ConfigError(f"fixation file {path} does not exist")

    rows = defaultdict(list)
    missing_images, dropped = set(), 0
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = [c.strip() for c in (reader.fieldnames or [])]
        absent = [c for c in REQUIRED_COLUMNS if c not in header]
        if absent:
            raise ConfigError(f"{path}: missing column(s) {', '.join(absent)}")
        reader.fieldnames = header
        for line_no, rec in enumerate(reader, start=2):
            sid = rec["stimulus_id"].strip()
            if sid not in stimuli:
                missing_images.add(sid)
                continue
            try:
                idx = int(float(rec["fixation_index"]))
                x, y = float(rec["x_px"]), float(rec["y_px"])
            except (TypeError, ValueError) as exc:
                raise InvalidInput(f"{path}:{line_no}: {exc}") from exc
            w, h = sizes[sid]
            if not in_bounds(x, y, w, h):
                dropped += 1
                continue
            rows[(sid, rec["subject_id"].strip())].append((idx, x, y))
    for sid in sorted(missing_images):
        log.warning("no image for stimulus %s; its fixations are skipped", sid)
    if dropped:
        log.warning("dropped %d out-of-bounds fixation row(s)", dropped)

    for key in sorted(rows):
        fx = [(x, y) for _, x, y in sorted(rows[key])]
        if len(fx) < min_fixations:
            log.warning("stimulus %s, subject %s: %d fixations (< %d); excluded from metrics",
                        key[0], key[1], len(fx), min_fixations)
        ds.fixations[key] = fx
    return ds


def write_scanpaths(scanpaths, path) -> Path:
    """Write scanpaths as ``stimulus_id, fixation_index, x_px, y_px`` rows."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stimulus_id", "fixation_index", "x_px", "y_px"])
        for sp in scanpaths:
            for i, (x, y) in enumerate(sp.fixations):
                w.writerow([sp.stimulus_id, i, repr(float(x)), repr(float(y))])
    return path


def read_scanpaths(path) -> dict:
    """Inverse of ``write_scanpaths``: stimulus id -> Scanpath."""
    path = Path(path)
    rows = defaultdict(list)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        for col in ("stimulus_id", "fixation_index", "x_px", "y_px"):
            if col not in (reader.fieldnames or []):
                raise InvalidInput(f"{path}: missing column {col}")
        for rec in reader:
            rows[rec["stimulus_id"]].append(
                (int(rec["fixation_index"]), float(rec["x_px"]), float(rec["y_px"])))
    return {sid: Scanpath(sid, [(x, y) for _, x, y in sorted(v)]) for sid, v in sorted(rows.items())}
