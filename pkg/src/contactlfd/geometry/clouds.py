"""Point clouds, nearest-neighbor distance queries and density clustering."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import EmptyCloud, TooFewPoints
from .transforms import Pose


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.size == 0:
            p = p.reshape(0, 3)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @property
    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def with_points(self, points) -> PointCloud:
        return PointCloud(points, self.label)


def transform_cloud(p: Pose, c: PointCloud) -> PointCloud:
    return PointCloud(p.apply(c.points) if len(c) else c.points, c.label)


def _as_points(c) -> np.ndarray:
    return c.points if isinstance(c, PointCloud) else np.asarray(c, dtype=float).reshape(-1, 3)


def _box_gap(p: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.maximum(np.maximum(lo - p, p - hi), 0.0), axis=1)


def min_distance(a, b) -> float:
    """Smallest distance between any point of ``a`` and any point of ``b``."""
    pa, pb = _as_points(a), _as_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyCloud("min_distance needs two non-empty clouds")
    # query the smaller set against a tree over the larger one
    if len(pa) > len(pb):
        pa, pb = pb, pa
    # a coarse subsample bounds the answer; only points that close to the other box can matter
    sa = pa[:: max(1, len(pa) // 32)]
    sb = pb[:: max(1, len(pb) // 256)]
    ub = np.sqrt(((sa[:, None, :] - sb[None, :, :]) ** 2).sum(-1).min())
    pa = pa[_box_gap(pa, pb.min(0), pb.max(0)) <= ub]
    pb = pb[_box_gap(pb, pa.min(0), pa.max(0)) <= ub]
    d, j = cKDTree(pb).query(pa, k=1)
    i = int(np.argmin(d))
    # recompute from coordinates so the value does not depend on argument order
    diff = pa[i] - pb[j[i]]
    return float(np.sqrt(diff @ diff))


def remove_statistical_outliers(c: PointCloud, k: int = 16, std_ratio: float = 2.0) -> PointCloud:
    """Drop points whose mean distance to their ``k`` nearest neighbors is unusually large.

    A point is kept when its mean neighbor distance is at most
    ``mean + std_ratio * std`` of that statistic over the whole cloud.
    """
    if k < 1 or std_ratio <= 0:
        raise ValueError("k must be >= 1 and std_ratio > 0")
    if len(c) <= k:
        raise TooFewPoints(f"cloud {c.label!r} has {len(c)} points, need more than k={k}")
    d, _ = cKDTree(c.points).query(c.points, k=k + 1)
    stat = d[:, 1:].mean(axis=1)
    limit = stat.mean() + std_ratio * stat.std()
    keep = stat <= limit
    return PointCloud(c.points[keep], c.label)


def cluster(points, eps: float = 0.01, min_pts: int = 5) -> tuple[list[np.ndarray], np.ndarray]:
    """Density-based clustering (DBSCAN semantics).

    A point is a core point when at least ``min_pts`` points (itself
    included) lie within ``eps``. Core points within ``eps`` of each other
    share a cluster; a non-core point within ``eps`` of a core point joins
    the cluster of its nearest core point, everything else is noise.

    Returns ``(clusters, noise)`` as arrays of input indices; clusters are
    numbered in order of their lowest-index core point.
    """
    if eps <= 0 or min_pts < 1:
        raise ValueError("eps must be > 0 and min_pts >= 1")
    pts = _as_points(points)
    n = len(pts)
    if n == 0:
        return [], np.zeros(0, dtype=int)
    tree = cKDTree(pts)
    neighbors = tree.query_ball_point(pts, eps)
    core = np.array([len(nb) >= min_pts for nb in neighbors])

    label = np.full(n, -1)
    n_clusters = 0
    for seed in range(n):
        if not core[seed] or label[seed] >= 0:
            continue
        label[seed] = n_clusters
        queue = deque([seed])
        while queue:
            i = queue.popleft()
            for j in neighbors[i]:
                if core[j] and label[j] < 0:
                    label[j] = n_clusters
                    queue.append(j)
        n_clusters += 1

    # border points go to the nearest core point's cluster
    core_idx = np.flatnonzero(core)
    if len(core_idx) and not core.all():
        core_tree = cKDTree(pts[core_idx])
        border = np.flatnonzero(~core)
        d, j = core_tree.query(pts[border], k=1, distance_upper_bound=eps)
        hit = np.isfinite(d) & (d <= eps)
        label[border[hit]] = label[core_idx[j[hit]]]

    clusters = [np.flatnonzero(label == c) for c in range(n_clusters)]
    return clusters, np.flatnonzero(label < 0)
