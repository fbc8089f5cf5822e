"""Command-line interface.

Subcommands mirror the pipeline stages: ``equilibria``, ``detect``,
``refine``, ``fit``, ``run`` and ``export``. Exit codes: 0 success,
2 bad configuration, then one code per failing stage (3 equilibria,
4 detect, 5 refine, 6 fit, 7 export).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import models, pipeline
from .detection import DetectionError, detect_points, points_to_csv
from .interpolation import InterpolationError, Kernel, build_interpolant
from .pipeline import (ConfigError, FittedSurface, RunConfig, StageError,
                       config_from_preset, load_config)
from .refinement import refine

_STAGE_CODES = {"config": 2, "equilibria": 3, "detect": 4, "refine": 5,
                "fit": 6, "export": 7}


def _add_config_args(p):
    p.add_argument("--preset", default=None,
                   help="built-in preset (hilker-ref, competition-2eq, "
                        "competition-3eq)")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--outdir", default=None, help="output directory")


def _build_config(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.outdir is not None:
        overrides.append(f"outdir={args.outdir}")
    if args.config is not None:
        return load_config(args.config, overrides)
    preset = args.preset or "hilker-ref"
    kv = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        kv[key] = pipeline._coerce(key, raw)
    return config_from_preset(preset, **kv)


def _load_points_csv(path):
    rows = Path(path).read_text().splitlines()
    header = rows[0].split(",")
    dim = len([c for c in header if c in ("x", "y", "z")])
    coords, labels = [], []
    for line in rows[1:]:
        parts = line.split(",")
        coords.append([float(v) for v in parts[:dim]])
        if len(parts) >= dim + 2:
            labels.append(frozenset(parts[dim:dim + 2]))
        else:
            labels.append(None)
    return np.array(coords), labels


def cmd_equilibria(args):
    cfg = _build_config(args)
    print(pipeline.report_equilibria(cfg))
    return 0


def cmd_detect(args):
    cfg = _build_config(args)
    system = models.preset_system(cfg.model)
    attractors = models.stable_attractors(system)
    try:
        matrix = detect_points(system, attractors, n=cfg.n, gamma=cfg.gamma,
                               cfg=cfg.integrator(), delta_bis=cfg.delta_bis,
                               split_target=cfg.split_attractor,
                               workers=cfg.workers)
    except DetectionError as exc:
        print(f"detect: {exc}", file=sys.stderr)
        return _STAGE_CODES["detect"]
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "points.csv"
    points_to_csv(matrix, path)
    print(f"N={len(matrix)} points -> {path}")
    return 0


def cmd_refine(args):
    cfg = _build_config(args)
    coords, labels = _load_points_csv(args.points)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.split_attractor:
            primary = np.array([c for c, l in zip(coords, labels)
                                if l and cfg.split_attractor in l])
            wall = np.array([c for c, l in zip(coords, labels)
                             if not l or cfg.split_attractor not in l])
            for name, cloud in (("primary", primary), ("wall", wall)):
                nodes = refine(cloud, cfg.L)
                path = outdir / f"refined_{name}.csv"
                pipeline._write_csv(path, nodes, "xyz"[:coords.shape[1]])
                print(f"K({name})={nodes.shape[0]} -> {path}")
        else:
            nodes = refine(coords, cfg.L)
            path = outdir / "refined_primary.csv"
            pipeline._write_csv(path, nodes, "xyz"[:coords.shape[1]])
            print(f"K={nodes.shape[0]} -> {path}")
    except ValueError as exc:
        print(f"refine: {exc}", file=sys.stderr)
        return _STAGE_CODES["refine"]
    return 0


def _fit_from_csv(cfg, nodes_path, name="primary"):
    cloud = np.loadtxt(nodes_path, delimiter=",", skiprows=1, ndmin=2)
    dim = cloud.shape[1]
    dep = cfg.axis_index(cfg.dependent_axis, dim)
    return pipeline._fit_cloud(name, cloud, dep, cfg.kernel, cfg.shape_c,
                               cfg.patches_d, cfg.overlap, dim,
                               use_hull=args_use_hull(cfg, name))


def args_use_hull(cfg, name):
    return name == "wall"


def cmd_fit(args):
    cfg = _build_config(args)
    try:
        surf = _fit_from_csv(cfg, args.nodes, name=args.name)
    except (InterpolationError, ValueError) as exc:
        print(f"fit: {exc}", file=sys.stderr)
        return _STAGE_CODES["fit"]
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = pipeline.export(surf, cfg.resolution, outdir,
                            csv=cfg.export_csv, mesh=cfg.export_mesh)
    print(f"max node error: {surf.interp.max_node_error():.3e}")
    for f in files:
        print(f)
    return 0


def cmd_export(args):
    # same machinery as fit, with an explicit resolution knob
    if args.resolution is not None:
        args.overrides.append(f"resolution={args.resolution}")
    return cmd_fit(args)


def cmd_run(args):
    cfg = _build_config(args)
    try:
        report = pipeline.run(cfg)
    except StageError as exc:
        print(exc, file=sys.stderr)
        return _STAGE_CODES.get(exc.stage, 1)
    print(report.to_text())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="separatrix",
        description="Detect, refine and reconstruct basin-of-attraction "
                    "separatrices of ODE systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibria", help="print the equilibrium table")
    _add_config_args(p)
    p.set_defaults(func=cmd_equilibria)

    p = sub.add_parser("detect", help="detect separatrix points")
    _add_config_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("refine", help="thin a detected point cloud")
    _add_config_args(p)
    p.add_argument("--points", required=True, help="points.csv from detect")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("fit", help="fit and sample an interpolant from nodes")
    _add_config_args(p)
    p.add_argument("--nodes", required=True, help="refined nodes CSV")
    p.add_argument("--name", default="primary",
                   help="surface name (primary or wall)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("export", help="re-export a fitted surface at a "
                                      "chosen resolution")
    _add_config_args(p)
    p.add_argument("--nodes", required=True, help="refined nodes CSV")
    p.add_argument("--name", default="primary")
    p.add_argument("--resolution", type=int, default=None)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("run", help="full pipeline: detect, refine, fit, export")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return _STAGE_CODES["config"]
    except models.ModelError as exc:
        print(f"equilibria: {exc}", file=sys.stderr)
        return _STAGE_CODES["equilibria"]


if __name__ == "__main__":
    sys.exit(main())
