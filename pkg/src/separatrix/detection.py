"""Separatrix point detection by boundary seeding and bisection.

Opposing points on the faces of [0, gamma]^s are classified; whenever the
two ends of a segment fall into different basins, bisection along the
segment brackets a separatrix crossing. With three attractors a midpoint
can land in a third basin, in which case the right sub-segment is pushed
onto a work stack and bisected independently, so a single segment may
yield several points with different label pairs.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integration import BasinLabel, IntegratorConfig, classify_basin
from .models import DynSystem, Equilibrium

DEFAULT_GAMMA = 10.0
DEFAULT_DELTA_FACTOR = 1e-4   # delta_bis = factor * gamma unless overridden


class DetectionError(RuntimeError):
    """No separatrix points found (mono-stability or bad domain)."""


@dataclass(frozen=True)
class SeedPair:
    """Two opposing boundary points of [0, gamma]^s differing in one axis."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        diff = np.nonzero(self.a != self.b)[0]
        if diff.size != 1:
            raise ValueError("seed endpoints must differ in exactly one coordinate")


@dataclass(frozen=True)
class LabeledPoint:
    """A separatrix point and the pair of basins it separates.

    ``axis`` is the coordinate along which the seed segment ran; the
    point's other coordinates still sit on the boundary seed grid.
    """

    location: np.ndarray
    separates: frozenset[str]
    bracket_width: float
    axis: int = 0

    def __post_init__(self):
        object.__setattr__(self, "location", np.asarray(self.location, dtype=float))
        if len(self.separates) != 2:
            raise ValueError("a separatrix point separates exactly two basins")


@dataclass
class PointMatrix:
    """Detected separatrix points, with the two-surface split when a
    split-target attractor is set (three-attractor case)."""

    points: list[LabeledPoint]
    split_target: str | None = None

    @property
    def primary(self) -> list[LabeledPoint]:
        """Points on the boundary of the split-target attractor's basin."""
        if self.split_target is None:
            return self.points
        return [p for p in self.points if self.split_target in p.separates]

    @property
    def wall(self) -> list[LabeledPoint]:
        """Points separating the remaining attractors from each other."""
        if self.split_target is None:
            return []
        return [p for p in self.points if self.split_target not in p.separates]

    def as_array(self, which="all") -> np.ndarray:
        pts = {"all": self.points, "primary": self.primary,
               "wall": self.wall}[which]
        if not pts:
            return np.empty((0, 0))
        return np.array([p.location for p in pts])

    def __len__(self):
        return len(self.points)


def boundary_seeds(dim: int, n: int, gamma: float = DEFAULT_GAMMA) -> list[SeedPair]:
    """Opposing seed pairs on the boundary of [0, gamma]^dim.

    2D: n vertical plus n horizontal pairs joining opposite edges.
    3D: 3 n^2 pairs joining the three families of opposite faces.
    """
    if n < 2:
        raise ValueError("need n >= 2 seeds per axis")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    ticks = np.linspace(0.0, gamma, n)
    pairs = []
    if dim == 2:
        for x in ticks:
            pairs.append(SeedPair(np.array([x, 0.0]), np.array([x, gamma])))
        for y in ticks:
            pairs.append(SeedPair(np.array([0.0, y]), np.array([gamma, y])))
    elif dim == 3:
        for c1 in ticks:
            for c2 in ticks:
                pairs.append(SeedPair(np.array([c1, c2, 0.0]),
                                      np.array([c1, c2, gamma])))
                pairs.append(SeedPair(np.array([c1, 0.0, c2]),
                                      np.array([c1, gamma, c2])))
                pairs.append(SeedPair(np.array([0.0, c1, c2]),
                                      np.array([gamma, c1, c2])))
    else:
        raise ValueError("only 2D and 3D domains are supported")
    return pairs


def bisect(system: DynSystem, pair: SeedPair, attractors, cfg: IntegratorConfig,
           delta_bis: float, _labels=None) -> list[LabeledPoint]:
    """Bisect one segment, returning all separatrix points found on it.

    Endpoint classifications can be passed via ``_labels`` to avoid
    recomputation. Segments whose ends agree (or are undecided) yield
    nothing. An undecided midpoint shifts the probe toward the left
    endpoint once; a second consecutive undecided probe abandons the
    bracket.
    """
    def label(point) -> str | None:
        return classify_basin(system, point, attractors, cfg).attractor

    la, lb = _labels if _labels is not None else (label(pair.a), label(pair.b))
    if la is None or lb is None or la == lb:
        return []

    axis = int(np.nonzero(pair.a != pair.b)[0][0])
    found = []
    stack = [(pair.a, la, pair.b, lb)]
    while stack:
        left, llab, right, rlab = stack.pop()
        undecided = 0
        while np.linalg.norm(right - left) > delta_bis:
            mid = 0.5 * (left + right)
            lm = label(mid)
            if lm is None:
                undecided += 1
                if undecided >= 2:
                    llab = None  # abandon this bracket
                    break
                right = mid  # retry nearer the left endpoint
                continue
            undecided = 0
            if lm == llab:
                left = mid
            elif lm == rlab:
                right = mid
            else:
                # third basin: keep bracketing against the left label,
                # bisect the right sub-segment independently
                stack.append((mid.copy(), lm, right, rlab))
                right, rlab = mid, lm
        if llab is None:
            continue
        found.append(LabeledPoint(0.5 * (left + right),
                                  frozenset((llab, rlab)),
                                  float(np.linalg.norm(right - left)),
                                  axis=axis))
    return found


def detect_points(system: DynSystem, attractors, n: int,
                  gamma: float = DEFAULT_GAMMA,
                  cfg: IntegratorConfig = IntegratorConfig(),
                  delta_bis: float | None = None,
                  split_target: str | None = None,
                  workers: int = 1) -> PointMatrix:
    """Run seeding plus bisection over every pair of opposing boundary
    points, returning the canonical (sorted) separatrix point set."""
    if len(attractors) < 2:
        raise DetectionError("need at least two stable attractors")
    if delta_bis is None:
        delta_bis = DEFAULT_DELTA_FACTOR * gamma
    pairs = boundary_seeds(system.dim, n, gamma)

    # classify each distinct endpoint once
    endpoints = {}
    for p in pairs:
        for e in (p.a, p.b):
            endpoints.setdefault(tuple(e), None)
    keys = list(endpoints)

    def _cls(key):
        return classify_basin(system, np.array(key), attractors, cfg).attractor

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for key, lab in zip(keys, pool.map(_cls, keys)):
                endpoints[key] = lab
    else:
        for key in keys:
            endpoints[key] = _cls(key)

    def _run(pair):
        return bisect(system, pair, attractors, cfg, delta_bis,
                      _labels=(endpoints[tuple(pair.a)], endpoints[tuple(pair.b)]))

    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for pts in pool.map(_run, pairs):
                results.extend(pts)
    else:
        for pair in pairs:
            results.extend(_run(pair))

    if not results:
        raise DetectionError(
            f"no separatrix detected in [0, {gamma}]^{system.dim} with n={n}")
    results.sort(key=lambda p: (tuple(p.location), sorted(p.separates)))
    return PointMatrix(results, split_target=split_target)


def points_to_csv(matrix: PointMatrix, path):
    """One CSV row per point: coordinates, label pair, bracket width."""
    with open(path, "w", newline="") as fh:
        dim = matrix.points[0].location.size
        cols = ["x", "y", "z"][:dim]
        fh.write(",".join(cols) + ",label_a,label_b,bracket_width\n")
        for p in matrix.points:
            la, lb = sorted(p.separates)
            fh.write(",".join(repr(float(v)) for v in p.location)
                     + f",{la},{lb},{p.bracket_width!r}\n")
