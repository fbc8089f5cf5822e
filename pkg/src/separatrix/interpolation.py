"""Partition-of-unity interpolation with compactly supported RBFs.

Local RBF interpolants are solved on overlapping circular patches whose
centers tile the bounding box of the node set; a Shepard-normalized
compactly supported bump on each patch blends the local fits into a
global interpolant that still matches every node value.

Six CSRBF families are available; all vanish identically for c*r >= 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial import cKDTree

DEFAULT_OVERLAP = 1.5


class InterpolationError(RuntimeError):
    pass


class CoverageError(InterpolationError):
    """An evaluation point is outside every patch."""


def _poly_family(name):
    # each returns the polynomial factor of the kernel in t = c*r
    if name == "wendland-c2":
        return lambda t: (1 - t) ** 4 * (4 * t + 1)
    if name == "wendland-c4":
        return lambda t: (1 - t) ** 6 * (35 * t ** 2 + 18 * t + 3)
    if name == "wu-c2":
        return lambda t: (1 - t) ** 5 * (((5 * t + 25) * t + 48) * t ** 2
                                         + 40 * t + 8)
    if name == "wu-c4":
        return lambda t: (1 - t) ** 6 * ((((5 * t + 30) * t + 72) * t + 82)
                                         * t ** 2 + 36 * t + 6)
    if name == "gneiting-c2-a":
        return lambda t: (1 - t) ** 3.5 * (-135.0 / 8.0 * t ** 2 + 3.5 * t + 1)
    if name == "gneiting-c2-b":
        return lambda t: (1 - t) ** 5 * (-27 * t ** 2 + 5 * t + 1)
    raise InterpolationError(f"unknown kernel family {name!r}")


KERNEL_FAMILIES = ("wendland-c2", "wendland-c4", "wu-c2", "wu-c4",
                   "gneiting-c2-a", "gneiting-c2-b")

# Families positive definite only up to dimension 2 of the interpolation
# space (the oscillatory ones).
_MAX_DIM = {"gneiting-c2-a": 2, "gneiting-c2-b": 2}


@dataclass(frozen=True)
class Kernel:
    """A CSRBF family with shape parameter c (support radius 1/c)."""

    family: str
    c: float

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InterpolationError(
                f"unknown kernel family {self.family!r}; "
                f"choose one of {KERNEL_FAMILIES}")
        if self.c <= 0:
            raise InterpolationError("shape parameter c must be positive")

    def __call__(self, r):
        """Evaluate the kernel at nonnegative radii (scalar or array)."""
        t = np.asarray(self.c * np.asarray(r, dtype=float))
        poly = _poly_family(self.family)
        inside = t < 1.0
        out = np.zeros_like(t)
        if np.any(inside):
            out[inside] = poly(t[inside])
        return out if out.ndim else float(out)


def kernel_eval(kernel: Kernel, r):
    return kernel(r)


@dataclass
class Patch:
    """One circular subdomain with its local RBF interpolant."""

    center: np.ndarray
    radius: float
    members: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    coeffs: np.ndarray | None = None
    residual: float = 0.0


def build_cover(nodes, box_min, box_max, d: int,
                overlap: float = DEFAULT_OVERLAP,
                probe_density: int = 50) -> list[Patch]:
    """Patch skeletons on a d-per-axis grid over the bounding box.

    The initial radius is ``overlap`` times half the center-spacing
    diagonal; radii are inflated by 1.1 until a dense probe grid is fully
    covered and every patch holds at least one node.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if nodes.shape[0] == 0:
        raise InterpolationError("cannot build a cover over zero nodes")
    if d < 1:
        raise InterpolationError("need d >= 1 patches per axis")
    box_min = np.atleast_1d(np.asarray(box_min, dtype=float))
    box_max = np.atleast_1d(np.asarray(box_max, dtype=float))
    dim = nodes.shape[1]

    spacing = (box_max - box_min) / d
    axes = [box_min[k] + (np.arange(d) + 0.5) * spacing[k] for k in range(dim)]
    centers = np.array(list(product(*axes)))
    radius = overlap * 0.5 * float(np.linalg.norm(spacing))
    if radius == 0.0:  # degenerate box (all nodes equal)
        radius = max(1.0, float(np.max(np.abs(box_max))) * 0.1)

    probes = np.array(list(product(*[
        np.linspace(box_min[k], box_max[k], probe_density) for k in range(dim)])))
    tree = cKDTree(nodes)
    while True:
        dists = np.linalg.norm(probes[:, None, :] - centers[None, :, :], axis=2)
        covered = np.all(np.min(dists, axis=1) < 0.999 * radius)
        nonempty = all(len(tree.query_ball_point(c, radius)) > 0 for c in centers)
        if covered and nonempty:
            break
        radius *= 1.1
    return [Patch(center=c, radius=radius,
                  members=np.array(sorted(tree.query_ball_point(c, radius)),
                                   dtype=int))
            for c in centers]


@dataclass
class PUInterpolant:
    """A solved partition-of-unity interpolant over a bounding box.

    ``dependent_axis`` records which coordinate of the original phase
    space this interpolant predicts; the nodes here live in the remaining
    (independent) coordinates.
    """

    kernel: Kernel
    patches: list[Patch]
    nodes: np.ndarray
    values: np.ndarray
    box_min: np.ndarray
    box_max: np.ndarray
    dependent_axis: int = -1
    weight_kernel: Kernel = None  # type: ignore[assignment]

    def __call__(self, p):
        return evaluate(self, p)

    def max_node_error(self) -> float:
        return float(np.max(np.abs(evaluate_many(self, self.nodes) - self.values)))


def solve_patches(patches, nodes, values, kernel: Kernel) -> PUInterpolant:
    """Solve the local symmetric systems and assemble the interpolant.

    Each patch's interpolation matrix is factorized as SPD; a numerically
    indefinite matrix is retried once with a tiny diagonal shift, after
    which failure is a hard error naming the patch.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    values = np.asarray(values, dtype=float)
    dim = nodes.shape[1]
    maxdim = _MAX_DIM.get(kernel.family)
    if maxdim is not None and dim > maxdim:
        raise InterpolationError(
            f"{kernel.family} is positive definite only up to dimension {maxdim}")
    for j, patch in enumerate(patches):
        sub = nodes[patch.members]
        if sub.shape[0] == 0:
            raise InterpolationError(f"patch {j} holds no nodes")
        dup = cKDTree(sub).query_pairs(1e-14)
        if dup:
            raise InterpolationError(
                f"patch {j} contains duplicate nodes (indices {sorted(dup)[0]})")
        f = values[patch.members]
        dist = np.linalg.norm(sub[:, None, :] - sub[None, :, :], axis=2)
        phi = kernel(dist)
        try:
            alpha = cho_solve(cho_factor(phi), f)
        except np.linalg.LinAlgError:
            shift = 1e-12 * np.trace(phi) / phi.shape[0]
            try:
                alpha = cho_solve(cho_factor(phi + shift * np.eye(phi.shape[0])), f)
            except np.linalg.LinAlgError as exc:
                raise InterpolationError(
                    f"patch {j}: interpolation matrix is not positive definite "
                    f"even after regularization") from exc
        patch.coeffs = alpha
        patch.residual = float(np.max(np.abs(phi @ alpha - f)))
    box_min = nodes.min(axis=0)
    box_max = nodes.max(axis=0)
    weight_kernel = Kernel("wendland-c2", 1.0)
    return PUInterpolant(kernel=kernel, patches=list(patches), nodes=nodes,
                         values=values, box_min=box_min, box_max=box_max,
                         weight_kernel=weight_kernel)


def build_interpolant(nodes, values, kernel: Kernel, d: int,
                      overlap: float = DEFAULT_OVERLAP,
                      dependent_axis: int = -1) -> PUInterpolant:
    """Convenience: cover the node bounding box with d patches per axis
    and solve."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    cover = build_cover(nodes, nodes.min(axis=0), nodes.max(axis=0), d,
                        overlap=overlap)
    interp = solve_patches(cover, nodes, values, kernel)
    interp.dependent_axis = dependent_axis
    return interp


def evaluate(interp: PUInterpolant, p) -> float:
    """Shepard-blended evaluation at one domain point."""
    return float(evaluate_many(interp, np.atleast_2d(np.asarray(p, dtype=float)))[0])


def evaluate_many(interp: PUInterpolant, pts) -> np.ndarray:
    """Vectorized evaluation at an (m, dim) array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = pts.shape[0]
    num = np.zeros(m)
    den = np.zeros(m)
    wk = interp.weight_kernel
    for patch in interp.patches:
        dc = np.linalg.norm(pts - patch.center, axis=1)
        inside = dc < patch.radius
        if not np.any(inside):
            continue
        w = wk(dc[inside] / patch.radius)
        sub = interp.nodes[patch.members]
        dist = np.linalg.norm(pts[inside][:, None, :] - sub[None, :, :], axis=2)
        local = interp.kernel(dist) @ patch.coeffs
        num[inside] += local * w
        den[inside] += w
    bad = den == 0.0
    if np.any(bad):
        raise CoverageError(
            f"{int(bad.sum())} evaluation point(s) outside every patch "
            f"(first: {pts[bad][0]})")
    return num / den


def pu_weight_sum(interp: PUInterpolant, pts) -> np.ndarray:
    """Sum of normalized partition-of-unity weights at each point (== 1
    wherever the cover holds; exposed for verification)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    den = np.zeros(pts.shape[0])
    for patch in interp.patches:
        dc = np.linalg.norm(pts - patch.center, axis=1)
        inside = dc < patch.radius
        den[inside] += interp.weight_kernel(dc[inside] / patch.radius)
    if np.any(den == 0.0):
        raise CoverageError("probe point outside every patch")
    out = np.zeros(pts.shape[0])
    for patch in interp.patches:
        dc = np.linalg.norm(pts - patch.center, axis=1)
        inside = dc < patch.radius
        out[inside] += interp.weight_kernel(dc[inside] / patch.radius) / den[inside]
    return out


def fill_distance(nodes, box_min, box_max, probe_density: int = 100) -> float:
    """Largest distance from a probe-grid point of the box to the node set."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if nodes.shape[0] == 0:
        raise InterpolationError("fill distance of an empty node set")
    box_min = np.atleast_1d(np.asarray(box_min, dtype=float))
    box_max = np.atleast_1d(np.asarray(box_max, dtype=float))
    dim = nodes.shape[1]
    probes = np.array(list(product(*[
        np.linspace(box_min[k], box_max[k], probe_density) for k in range(dim)])))
    dists, _ = cKDTree(nodes).query(probes)
    return float(np.max(dists))
