"""``neva`` command-line entry point.

Exit codes: 0 on success, 2 on configuration errors, 3 on data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, InvalidInput, InvalidModel, InvalidParameter, NevaError
from .runner import (gamma_sweep, load_config_dataset, read_generated, run_evaluate,
                     run_foveate, run_generate, run_saccades)

EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("neva")


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    if args.seed is not None:
        out["run.seed"] = str(args.seed)
    if args.out is not None:
        out["run.out"] = args.out
    return out


def _parse_fixations(text: str) -> list:
    try:
        pts = [tuple(float(v) for v in p.split(",")) for p in text.split(";") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse fixations {text!r}") from exc
    if not pts or any(len(p) != 2 for p in pts):
        raise ConfigError("fixations must look like 'x,y;x,y;...'")
    return pts


def cmd_generate(args):
    cfg = load_config(args.config, _overrides(args))
    for name, path in run_generate(cfg).items():
        print(f"{name}: {path}")


def cmd_evaluate(args):
    cfg = load_config(args.config, _overrides(args))
    dataset = load_config_dataset(cfg)
    generated = read_generated(args.generated or cfg.out)
    report = run_evaluate(cfg, generated, dataset)
    for name, e in sorted(report["generators"].items()):
        print(f"{name:>8}: mean SED {e['mean_sed'][-1]:.3f}  SPP SED {e['spp_sed'][-1]:.3f}  "
              f"mean SBTDE {e['mean_sbtde'][-1]:.3f}  SPP SBTDE {e['spp_sbtde'][-1]:.3f}")


def cmd_saccades(args):
    cfg = load_config(args.config, _overrides(args))
    dataset = load_config_dataset(cfg)
    generated = read_generated(args.generated or cfg.out)
    hists = run_saccades(cfg, generated, dataset)
    print(f"wrote {len(hists)} histograms and kl_matrix.csv to {cfg.out}")


def cmd_foveate(args):
    cfg = load_config(args.config, _overrides(args))
    res = run_foveate(cfg, args.image, _parse_fixations(args.fixations))
    print(f"wrote {len(res['perceived'])} perceived images and overlays to {cfg.out}")


def cmd_sweep(args):
    cfg = load_config(args.config, _overrides(args))
    dataset = load_config_dataset(cfg, with_fixations=cfg.fixations is not None)
    gammas = [float(g) for g in args.gammas.split(",")]
    for g, report in gamma_sweep(cfg, gammas, dataset).items():
        if report is None:
            print(f"gamma={g:.2f}: generated")
        else:
            e = report["generators"]["neva_o"]
            print(f"gamma={g:.2f}: N-SED(mean, k=N) {e['n_mean_sed'][-1]}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neva", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", help="output directory (run.out)")
        p.add_argument("--seed", type=int, help="random seed (run.seed)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key; repeatable")
        return p

    common(sub.add_parser("generate", help="generate scanpaths")).set_defaults(func=cmd_generate)
    for name, func, helptext in (("evaluate", cmd_evaluate, "score scanpaths against humans"),
                                 ("saccades", cmd_saccades, "saccade amplitude statistics")):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--generated", help="directory with scanpaths_*.csv (default: --out)")
        p.set_defaults(func=func)
    p = common(sub.add_parser("foveate", help="render foveated views for given fixations"))
    p.add_argument("image")
    p.add_argument("--fixations", required=True, help="'x,y;x,y;...'")
    p.set_defaults(func=cmd_foveate)
    p = common(sub.add_parser("sweep-gamma", help="NeVA-O over several forgetting values"))
    p.add_argument("--gammas", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (InvalidInput, InvalidModel, InvalidParameter, NevaError, OSError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
