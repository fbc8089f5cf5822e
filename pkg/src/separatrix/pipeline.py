"""End-to-end orchestration: config, presets, run, exports.

A run goes equilibria -> detect -> refine -> fit -> export. Configuration
is a flat key=value text file plus overrides; the three built-in presets
map each reference figure to a single command.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from . import models
from .detection import DetectionError, detect_points, points_to_csv
from .integration import IntegratorConfig, classify_basin
from .interpolation import Kernel, PUInterpolant, build_interpolant, evaluate_many
from .refinement import refine

_AXIS_NAMES = "xyz"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """A pipeline stage failed; partial artifacts stay on disk."""

    def __init__(self, stage, message):
        super().__init__(f"stage {stage!r}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run depends on.

    ``model`` is a preset name. ``wall_*`` keys configure the second
    interpolant in the three-attractor case; they default to the primary
    settings when left at None.
    """

    model: str = "hilker-ref"
    n: int = 20
    gamma: float = 10.0
    L: int = 12
    delta_bis: float | None = None
    atol: float = 1e-10
    rtol: float = 1e-8
    t_max: float = 1000.0
    eps_attr: float = 1e-3
    dwell: int = 10
    max_steps: int = 1_000_000
    kernel: str = "wendland-c2"
    shape_c: float = 0.015
    patches_d: int = 4
    overlap: float = 1.5
    dependent_axis: str = "y"
    split_attractor: str | None = None
    wall_kernel: str | None = None
    wall_shape_c: float | None = None
    wall_patches_d: int | None = None
    wall_dependent_axis: str | None = None
    resolution: int = 100
    workers: int = 1
    outdir: str = "out"
    export_csv: bool = True
    export_mesh: bool = True
    export_plot: bool = True

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(atol=self.atol, rtol=self.rtol, t_max=self.t_max,
                                eps_attr=self.eps_attr, dwell=self.dwell,
                                max_steps=self.max_steps)

    def axis_index(self, name: str, dim: int) -> int:
        if name not in _AXIS_NAMES[:dim]:
            raise ConfigError(f"dependent axis {name!r} invalid for a "
                              f"{dim}-dimensional model")
        return _AXIS_NAMES.index(name)


# per-preset defaults layered on top of RunConfig defaults
PRESET_CONFIG = {
    "hilker-ref": dict(model="hilker-ref", n=20, L=12,
                       kernel="gneiting-c2-a", shape_c=0.015, patches_d=4,
                       dependent_axis="y"),
    "competition-2eq": dict(model="competition-2eq", n=10, L=13,
                            kernel="wendland-c2", shape_c=0.005, patches_d=4,
                            dependent_axis="z"),
    "competition-3eq": dict(model="competition-3eq", n=7, L=13,
                            kernel="wendland-c2", shape_c=0.005, patches_d=4,
                            dependent_axis="z", split_attractor="E3",
                            wall_kernel="wendland-c2", wall_shape_c=0.005,
                            wall_patches_d=3, wall_dependent_axis="y"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL_KEYS = {"export_csv", "export_mesh", "export_plot"}
_INT_KEYS = {"n", "L", "dwell", "max_steps", "patches_d", "wall_patches_d",
             "resolution", "workers"}
_FLOAT_KEYS = {"gamma", "delta_bis", "atol", "rtol", "t_max", "eps_attr",
               "shape_c", "overlap", "wall_shape_c"}


def _coerce(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    if raw.lower() in ("none", ""):
        return None
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


def config_from_preset(name: str, **overrides) -> RunConfig:
    if name not in PRESET_CONFIG:
        raise ConfigError(f"unknown preset {name!r}; "
                          f"available: {sorted(PRESET_CONFIG)}")
    merged = dict(PRESET_CONFIG[name])
    merged.update(overrides)
    return _validated(RunConfig(**merged))


def load_config(path, overrides=()) -> RunConfig:
    """Read a flat key=value config file and apply key=value overrides."""
    settings = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        settings[key] = _coerce(key, raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        settings[key] = _coerce(key, raw)
    preset = settings.pop("model", "hilker-ref")
    if preset in PRESET_CONFIG:
        return config_from_preset(preset, **settings)
    raise ConfigError(f"unknown model {preset!r}")


def _validated(cfg: RunConfig) -> RunConfig:
    if cfg.n < 2:
        raise ConfigError("n must be >= 2")
    if cfg.gamma <= 0:
        raise ConfigError("gamma must be positive")
    if cfg.L < 1:
        raise ConfigError("L must be >= 1")
    if cfg.shape_c <= 0:
        raise ConfigError("shape_c must be positive")
    if cfg.patches_d < 1:
        raise ConfigError("patches_d must be >= 1")
    if cfg.resolution < 2:
        raise ConfigError("resolution must be >= 2")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


@dataclass
class FittedSurface:
    """One reconstructed separatrix manifold plus its export metadata."""

    name: str
    interp: PUInterpolant
    dependent_axis: int
    independent_axes: tuple[int, ...]
    node_count: int
    hull: Delaunay | None = None  # restricts surface evaluation when set


@dataclass
class RunReport:
    config: RunConfig
    n_points: int = 0
    n_primary: int = 0
    n_wall: int = 0
    k_nodes: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    node_errors: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    surfaces: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"model: {self.config.model}",
                 f"N (separatrix points): {self.n_points}"]
        if self.config.split_attractor:
            lines.append(f"N' (boundary of {self.config.split_attractor}): "
                         f"{self.n_primary}")
            lines.append(f"N'' (wall): {self.n_wall}")
        for name, k in self.k_nodes.items():
            lines.append(f"K ({name}): {k}")
        for name, err in self.node_errors.items():
            lines.append(f"max node error ({name}): {err:.3e}")
        for stage, dt in self.timings.items():
            lines.append(f"time {stage}: {dt:.2f} s")
        lines.append("files:")
        lines.extend(f"  {f}" for f in self.files)
        return "\n".join(lines)


def _saddles_on_boundary(system, attractors, cfg: RunConfig):
    """2D saddle augmentation: a saddle joins the node set when nearby
    probes classify to more than one attractor (it sits on the boundary)."""
    icfg = cfg.integrator()
    probe_step = 2.0 * (cfg.delta_bis if cfg.delta_bis is not None
                        else 1e-4 * cfg.gamma)
    picked = []
    for eq in models.classified_equilibria(system):
        if eq.stability != models.SADDLE or not eq.feasible:
            continue
        seen = set()
        for ang in np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False):
            probe = eq.location + probe_step * np.array(
                [np.cos(ang), np.sin(ang)])
            if np.any(probe < 0):
                continue
            lab = classify_basin(system, probe, attractors, icfg)
            if lab.converged:
                seen.add(lab.attractor)
        if len(seen) >= 2:
            picked.append(eq.location)
    return picked


def report_equilibria(config: RunConfig) -> str:
    """Human-readable equilibrium table: location, feasibility, stability,
    eigenvalues, and (3D) the analytic stability-table verdict."""
    system = models.preset_system(config.model)
    eqs = models.classified_equilibria(system)
    table_verdicts = {}
    if system.name == "competition":
        rep = models.stability_report(models.PRESET_PARAMS[config.model])
        stable = rep.stable_set()
        table_verdicts = {f"E{i}": (f"E{i}" in stable) for i in range(7)}
        table_verdicts["E0"] = False
    lines = [f"{'eq':<4} {'location':<28} {'feasible':<9} {'stability':<10} "
             f"{'table':<7} eigenvalues"]
    for eq in eqs:
        loc = ("-" if eq.location is None
               else "(" + ", ".join(f"{v:.4f}" for v in eq.location) + ")")
        tab = table_verdicts.get(eq.identity)
        tabs = "-" if tab is None else ("stable" if tab else "not")
        eigs = ("-" if eq.eigenvalues is None else
                ", ".join(f"{ev.real:+.4f}{ev.imag:+.4f}j" if ev.imag else
                          f"{ev.real:+.4f}" for ev in eq.eigenvalues))
        stab = eq.stability or ("degenerate" if eq.degenerate else "?")
        lines.append(f"{eq.identity:<4} {loc:<28} {str(eq.feasible):<9} "
                     f"{stab:<10} {tabs:<7} {eigs}")
    return "\n".join(lines)


def _fit_cloud(name, cloud, dep_axis, kernel_name, shape_c, d, overlap,
               dim, use_hull):
    indep = tuple(k for k in range(dim) if k != dep_axis)
    nodes = cloud[:, list(indep)]
    values = cloud[:, dep_axis]
    interp = build_interpolant(nodes, values, Kernel(kernel_name, shape_c),
                               d=d, overlap=overlap, dependent_axis=dep_axis)
    hull = None
    if use_hull and nodes.shape[1] >= 2:
        hull = Delaunay(nodes)
    return FittedSurface(name=name, interp=interp, dependent_axis=dep_axis,
                         independent_axes=indep, node_count=cloud.shape[0],
                         hull=hull)


def run(config: RunConfig) -> RunReport:
    """Execute the full pipeline and write all exports.

    Deterministic given the config: detection output is canonically
    sorted and floats are serialized with shortest round-trip repr.
    """
    config = _validated(config)
    report = RunReport(config=config)
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    try:
        system = models.preset_system(config.model)
        attractors = models.stable_attractors(system)
        if len(attractors) < 2:
            raise StageError("equilibria",
                             f"{config.model} has {len(attractors)} stable "
                             f"equilibria; nothing separates")
    except models.ModelError as exc:
        raise StageError("equilibria", str(exc)) from exc
    eq_path = outdir / "equilibria.txt"
    eq_path.write_text(report_equilibria(config) + "\n")
    report.files.append(str(eq_path))
    report.timings["equilibria"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        matrix = detect_points(system, attractors, n=config.n,
                               gamma=config.gamma, cfg=config.integrator(),
                               delta_bis=config.delta_bis,
                               split_target=config.split_attractor,
                               workers=config.workers)
    except DetectionError as exc:
        raise StageError("detect", str(exc)) from exc
    report.n_points = len(matrix)
    report.n_primary = len(matrix.primary)
    report.n_wall = len(matrix.wall)
    if config.export_csv:
        pts_path = outdir / "points.csv"
        points_to_csv(matrix, pts_path)
        report.files.append(str(pts_path))
    report.timings["detect"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    clouds = {}
    try:
        if config.split_attractor:
            if not matrix.wall or not matrix.primary:
                raise StageError("refine", "split produced an empty surface")
            clouds["primary"] = refine(matrix.as_array("primary"), config.L)
            clouds["wall"] = refine(matrix.as_array("wall"), config.L)
        else:
            cloud = refine(matrix.as_array(), config.L)
            if system.dim == 2:
                extra = _saddles_on_boundary(system, attractors, config)
                if extra:
                    cloud = np.vstack([cloud, extra])
            clouds["primary"] = cloud
    except ValueError as exc:
        raise StageError("refine", str(exc)) from exc
    for name, cloud in clouds.items():
        report.k_nodes[name] = cloud.shape[0]
        if config.export_csv:
            path = outdir / f"refined_{name}.csv"
            _write_csv(path, cloud, _AXIS_NAMES[:system.dim])
            report.files.append(str(path))
    report.timings["refine"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    surfaces = []
    try:
        dep = config.axis_index(config.dependent_axis, system.dim)
        surfaces.append(_fit_cloud("primary", clouds["primary"], dep,
                                   config.kernel, config.shape_c,
                                   config.patches_d, config.overlap,
                                   system.dim, use_hull=False))
        if config.split_attractor:
            wdep = config.axis_index(
                config.wall_dependent_axis or config.dependent_axis, system.dim)
            surfaces.append(_fit_cloud(
                "wall", clouds["wall"], wdep,
                config.wall_kernel or config.kernel,
                config.wall_shape_c or config.shape_c,
                config.wall_patches_d or config.patches_d,
                config.overlap, system.dim, use_hull=True))
    except Exception as exc:
        raise StageError("fit", str(exc)) from exc
    for surf in surfaces:
        report.residuals[surf.name] = max(
            p.residual for p in surf.interp.patches)
        report.node_errors[surf.name] = surf.interp.max_node_error()
    report.surfaces = surfaces
    report.timings["fit"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        for surf in surfaces:
            report.files.extend(export(surf, config.resolution, outdir,
                                       csv=config.export_csv,
                                       mesh=config.export_mesh))
        if config.export_plot:
            plot_path = outdir / "plot.py"
            plot_path.write_text(_plot_script(system.dim, config))
            report.files.append(str(plot_path))
    except OSError as exc:
        raise StageError("export", str(exc)) from exc
    report.timings["export"] = time.perf_counter() - t0

    report_path = outdir / "report.txt"
    report_path.write_text(report.to_text() + "\n")
    report.files.append(str(report_path))
    return report


def _write_csv(path, array, header_cols):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header_cols) + "\n")
        for row in np.atleast_2d(array):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def surface_samples(surf: FittedSurface, resolution: int):
    """Sample a fitted manifold on a regular grid over its domain.

    Returns (points, keep): full phase-space sample points and, for
    hull-restricted surfaces, the in-hull mask already applied.
    """
    interp = surf.interp
    dim = len(surf.independent_axes) + 1
    if dim == 2:
        xs = np.linspace(interp.box_min[0], interp.box_max[0], resolution)
        grid = xs.reshape(-1, 1)
    else:
        gx = np.linspace(interp.box_min[0], interp.box_max[0], resolution)
        gy = np.linspace(interp.box_min[1], interp.box_max[1], resolution)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        grid = np.column_stack([X.ravel(), Y.ravel()])
    if surf.hull is not None:
        keep = surf.hull.find_simplex(grid) >= 0
    else:
        keep = np.ones(grid.shape[0], dtype=bool)
    vals = np.full(grid.shape[0], np.nan)
    if np.any(keep):
        vals[keep] = evaluate_many(interp, grid[keep])
    full = np.empty((grid.shape[0], dim))
    for col, axis in enumerate(surf.independent_axes):
        full[:, axis] = grid[:, col]
    full[:, surf.dependent_axis] = vals
    return full, keep, grid


def export(surf: FittedSurface, resolution: int, outdir, csv=True, mesh=True):
    """Write the sampled-surface CSV and mesh/polyline files."""
    outdir = Path(outdir)
    files = []
    full, keep, grid = surface_samples(surf, resolution)
    dim = full.shape[1]
    cols = list(_AXIS_NAMES[:dim])
    if csv:
        path = outdir / f"samples_{surf.name}.csv"
        _write_csv(path, full[keep], cols)
        files.append(str(path))
    if mesh:
        if dim == 2:
            path = outdir / f"curve_{surf.name}.polyline.txt"
            with open(path, "w") as fh:
                for row in full[keep]:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        else:
            path = outdir / f"mesh_{surf.name}.off"
            _write_off(path, full, keep, resolution)
        files.append(str(path))
    return files


def _write_off(path, full, keep, resolution):
    """Triangulated grid mesh in OFF format; triangles with any vertex
    outside the evaluation domain are dropped."""
    index = -np.ones(full.shape[0], dtype=int)
    index[keep] = np.arange(int(keep.sum()))
    tris = []
    for i in range(resolution - 1):
        for j in range(resolution - 1):
            v00 = i * resolution + j
            v01 = v00 + 1
            v10 = v00 + resolution
            v11 = v10 + 1
            if keep[v00] and keep[v10] and keep[v01]:
                tris.append((index[v00], index[v10], index[v01]))
            if keep[v01] and keep[v10] and keep[v11]:
                tris.append((index[v01], index[v10], index[v11]))
    verts = full[keep]
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{verts.shape[0]} {len(tris)} 0\n")
        for row in verts:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for tri in tris:
            fh.write("3 " + " ".join(str(v) for v in tri) + "\n")


def _plot_script(dim, config: RunConfig) -> str:
    surf_blocks = ["primary"]
    if config.split_attractor:
        surf_blocks.append("wall")
    lines = [
        "#!/usr/bin/env python3",
        '"""Static plot of the exported separatrix data (run from the',
        'output directory)."""',
        "import numpy as np",
        "import matplotlib.pyplot as plt",
        "",
    ]
    if dim == 2:
        lines += [
            "pts = np.loadtxt('points.csv', delimiter=',', skiprows=1,",
            "                 usecols=(0, 1))",
            "nodes = np.loadtxt('refined_primary.csv', delimiter=',', skiprows=1)",
            "curve = np.loadtxt('samples_primary.csv', delimiter=',', skiprows=1)",
            "fig, ax = plt.subplots()",
            "ax.plot(pts[:, 0], pts[:, 1], '.', ms=4, label='detected')",
            "ax.plot(nodes[:, 0], nodes[:, 1], 'o', ms=6, mfc='none',",
            "        label='refined')",
            "ax.plot(curve[:, 0], curve[:, 1], '-', label='reconstruction')",
            "ax.set_xlabel('x'); ax.set_ylabel('y'); ax.legend()",
            "fig.savefig('separatrix.png', dpi=150)",
        ]
    else:
        lines += [
            "from matplotlib.tri import Triangulation",
            "fig = plt.figure()",
            "ax = fig.add_subplot(projection='3d')",
        ]
        for name in surf_blocks:
            lines += [
                f"s = np.loadtxt('samples_{name}.csv', delimiter=',', skiprows=1)",
                "ax.plot_trisurf(s[:, 0], s[:, 1], s[:, 2], alpha=0.6)",
            ]
        lines += [
            "pts = np.loadtxt('points.csv', delimiter=',', skiprows=1,",
            "                 usecols=(0, 1, 2))",
            "ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], '.', ms=2)",
            "ax.set_xlabel('x'); ax.set_ylabel('y'); ax.set_zlabel('z')",
            "fig.savefig('separatrix.png', dpi=150)",
        ]
    return "\n".join(lines) + "\n"
