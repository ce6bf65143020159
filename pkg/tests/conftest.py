import numpy as np
import pytest

from neva import Stimulus, ViewingGeometry


@pytest.fixture
def geom():
    # 28 px/cm on both axes, viewer at 70 cm
    return ViewingGeometry(1024, 768, 1024 / 28, 768 / 28, 70.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def checker():
    """64x64 greyscale checkerboard of 4x4 blocks."""
    yy, xx = np.mgrid[0:64, 0:64]
    return Stimulus((((xx // 4) + (yy // 4)) % 2).astype(float), "checker")


def random_stimulus(rng, h=32, w=32, c=1, sid="rand"):
    return Stimulus(rng.random((h, w, c)), sid)


GEOMETRY_LINES = """\
geometry.screen_width_px = 1024
geometry.screen_height_px = 768
geometry.screen_width_cm = 36.5714
geometry.screen_height_cm = 27.4286
geometry.viewer_distance_cm = 70
"""


def write_toy_dataset(root, n_images=3, n_subjects=3, n_fix=10, size=(64, 48), seed=0,
                      extra_rows=(), shuffle=False, cluster=False):
    """Random greyscale PNGs plus a fixation CSV and a config file under ``root``.

    Fixations are uniform pixels, or with ``cluster=True`` drawn around the
    image centre like real viewers. Returns ``(config path, list of CSV rows)``.
    """
    from PIL import Image

    rng = np.random.default_rng(seed)
    img_dir = root / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    w, h = size
    rows = []
    for i in range(n_images):
        sid = f"img{i:02d}"
        Image.fromarray((rng.random((h, w)) * 255).astype(np.uint8)).save(img_dir / f"{sid}.png")
        for s in range(n_subjects):
            for k in range(n_fix):
                if cluster:
                    x = float(np.clip(np.round(rng.normal(w / 2, w / 8)), 0, w - 1))
                    y = float(np.clip(np.round(rng.normal(h / 2, h / 8)), 0, h - 1))
                else:
                    x, y = float(rng.integers(0, w)), float(rng.integers(0, h))
                rows.append((sid, f"sub{s}", k, x, y))
    rows += list(extra_rows)
    if shuffle:
        rows = [rows[i] for i in rng.permutation(len(rows))]
    with (root / "fixations.csv").open("w") as fh:
        fh.write("stimulus_id,subject_id,fixation_index,x_px,y_px\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    cfg = root / "run.cfg"
    cfg.write_text(
        "data.images = images\n"
        "data.fixations = fixations.csv\n"
        + GEOMETRY_LINES +
        "foveation.sigma_p = 3\n"
        "foveation.sigma_xi = 4\n"
        "generate.candidate_rows = 4\n"
        "generate.candidate_cols = 4\n"
        "run.out = out\n"
    )
    return cfg, rows
