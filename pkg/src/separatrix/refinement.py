"""Thinning of raw separatrix clouds by cell averaging.

The bounding box [0, M_x] x [0, M_y] (x [0, M_z]) of the cloud is split
into L^s equal cells; every nonempty cell contributes the componentwise
mean of its members. Cells are flattened in lexicographic index order.
"""
from __future__ import annotations

import numpy as np


def refine(points, L: int) -> np.ndarray:
    """Average a point cloud over an L-per-axis grid on [0, max]^s.

    ``points`` is an (N, s) array (or anything convertible). Returns the
    (K, s) array of nonempty-cell means, K <= min(N, L^s). Cell edges are
    half-open, last cell closed, so every point lands in exactly one cell.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("refine needs a nonempty (N, s) point array")
    if L < 1:
        raise ValueError("L must be >= 1")
    maxima = pts.max(axis=0)

    idx = np.zeros(pts.shape, dtype=np.int64)
    for k in range(pts.shape[1]):
        if maxima[k] > 0:
            idx[:, k] = np.minimum((pts[:, k] / (maxima[k] / L)).astype(np.int64),
                                   L - 1)
    # lexicographic cell key
    keys = idx[:, 0]
    for k in range(1, pts.shape[1]):
        keys = keys * L + idx[:, k]
    order = np.argsort(keys, kind="stable")
    keys_sorted = keys[order]
    pts_sorted = pts[order]
    boundaries = np.nonzero(np.diff(keys_sorted))[0] + 1
    groups = np.split(pts_sorted, boundaries)
    return np.array([g.mean(axis=0) for g in groups])
