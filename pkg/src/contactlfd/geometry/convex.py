"""Convex shapes, GJK distance queries and cluster-based collision models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import Degenerate, NoValidParts
from .clouds import PointCloud, cluster, remove_statistical_outliers
from .transforms import Pose


@dataclass(frozen=True, eq=False)
class ConvexShape:
    """Convex hull of ``vertices`` (body frame, meters)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        if len(v) < 4:
            raise Degenerate(f"convex shape needs >= 4 vertices, got {len(v)}")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @cached_property
    def _hull(self) -> ConvexHull:
        try:
            return ConvexHull(self.vertices)
        except QhullError as exc:
            raise Degenerate("vertices are coplanar or collinear") from exc

    @cached_property
    def face_normals(self) -> np.ndarray:
        """Unique outward unit normals of the hull facets."""
        n = self._hull.equations[:, :3]
        return np.unique(np.round(n, 12), axis=0)

    @cached_property
    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def radius(self) -> float:
        return float(np.max(np.linalg.norm(self.vertices - self.center, axis=1)))

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        eq = self._hull.equations
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        return np.all(p @ eq[:, :3].T + eq[:, 3] <= tol, axis=1)

    def posed(self, pose: Pose) -> np.ndarray:
        return pose.apply(self.vertices)

    def to_list(self) -> list:
        return self.vertices.tolist()


@dataclass(frozen=True, eq=False)
class CollisionModel:
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise NoValidParts("collision model needs at least one part")
        object.__setattr__(self, "parts", parts)

    @cached_property
    def center(self) -> np.ndarray:
        return np.vstack([p.vertices for p in self.parts]).mean(axis=0)

    @cached_property
    def radius(self) -> float:
        v = np.vstack([p.vertices for p in self.parts])
        return float(np.max(np.linalg.norm(v - self.center, axis=1)))

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        inside = np.zeros(len(p), dtype=bool)
        for part in self.parts:
            inside |= part.contains(p, tol)
        return inside

    def to_list(self) -> list:
        return [p.to_list() for p in self.parts]

    @classmethod
    def from_list(cls, parts) -> CollisionModel:
        return cls(tuple(ConvexShape(np.asarray(v, dtype=float)) for v in parts))


class Separation(NamedTuple):
    separation: float
    intersecting: bool


def convex_hull(points) -> ConvexShape:
    pts = np.asarray(points.points if isinstance(points, PointCloud) else points, dtype=float).reshape(-1, 3)
    if len(pts) < 4:
        raise Degenerate(f"need >= 4 points for a 3D hull, got {len(pts)}")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise Degenerate("points are coplanar or collinear") from exc
    scale = max(float(np.ptp(pts, axis=0).max()), 1e-300)
    if hull.volume <= 1e-12 * scale ** 3:
        raise Degenerate("hull has no volume")
    return ConvexShape(pts[np.sort(hull.vertices)])


# ---------------------------------------------------------------------------
# GJK on the Minkowski difference A - B. Simplex bookkeeping uses plain float
# tuples; support mapping uses numpy over the posed vertex arrays.

def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _add_scaled(a, s, d):
    return (a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2])


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _closest_segment(a, b):
    ab = _sub(b, a)
    denom = _dot(ab, ab)
    if denom <= 0.0:
        return a, [a]
    t = -_dot(a, ab) / denom
    if t <= 0.0:
        return a, [a]
    if t >= 1.0:
        return b, [b]
    return _add_scaled(a, t, ab), [a, b]


def _closest_triangle(a, b, c):
    ab = _sub(b, a)
    ac = _sub(c, a)
    d1 = -_dot(ab, a)
    d2 = -_dot(ac, a)
    if d1 <= 0.0 and d2 <= 0.0:
        return a, [a]
    d3 = -_dot(ab, b)
    d4 = -_dot(ac, b)
    if d3 >= 0.0 and d4 <= d3:
        return b, [b]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return _add_scaled(a, v, ab), [a, b]
    d5 = -_dot(ab, c)
    d6 = -_dot(ac, c)
    if d6 >= 0.0 and d5 <= d6:
        return c, [c]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return _add_scaled(a, w, ac), [a, c]
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return _add_scaled(b, w, _sub(c, b)), [b, c]
    denom = va + vb + vc
    if denom == 0.0:
        # collapsed triangle: best of its edges
        cands = [_closest_segment(a, b), _closest_segment(a, c), _closest_segment(b, c)]
        return min(cands, key=lambda pc: _dot(pc[0], pc[0]))
    v = vb / denom
    w = vc / denom
    p = (a[0] + ab[0] * v + ac[0] * w, a[1] + ab[1] * v + ac[1] * w, a[2] + ab[2] * v + ac[2] * w)
    return p, [a, b, c]


_TET_FACES = ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (1, 3, 2, 0))


def _closest_tetrahedron(pts):
    best = None
    outside_any = False
    for i, j, k, o in _TET_FACES:
        p, q, r, opp = pts[i], pts[j], pts[k], pts[o]
        n = _cross(_sub(q, p), _sub(r, p))
        side_origin = -_dot(n, p)
        side_opp = _dot(n, _sub(opp, p))
        nn = _dot(n, n)
        flat = side_opp * side_opp <= 1e-24 * nn * max(_dot(_sub(opp, p), _sub(opp, p)), 1e-300)
        if flat or side_origin * side_opp < 0.0:
            outside_any = True
            cand = _closest_triangle(p, q, r)
            if best is None or _dot(cand[0], cand[0]) < _dot(best[0], best[0]):
                best = cand
    if not outside_any:
        return None
    return best


def _closest_on_simplex(simplex):
    n = len(simplex)
    if n == 1:
        return simplex[0], simplex
    if n == 2:
        return _closest_segment(*simplex)
    if n == 3:
        return _closest_triangle(*simplex)
    return _closest_tetrahedron(simplex)


def _gjk(va: np.ndarray, vb: np.ndarray, margin: float | None = None, max_iter: int = 100):
    """Distance between conv(va) and conv(vb).

    Returns ``(distance, intersecting)``. With ``margin`` set, returns early
    with a lower bound as soon as the sets are proven farther apart than
    ``margin``, or with an upper bound once they are proven closer.
    """
    v = tuple((va[0] - vb[0]).tolist())
    simplex = [v]
    vv = _dot(v, v)
    for _ in range(max_iter):
        if vv <= 1e-30:
            return 0.0, True
        d = np.array(v)
        a = va[int(np.argmax(va @ -d))]
        b = vb[int(np.argmax(vb @ d))]
        w = (a[0] - b[0], a[1] - b[1], a[2] - b[2])
        vw = _dot(v, w)
        if margin is not None:
            if vw > 0.0 and vw * vw > margin * margin * vv:
                return vw / math.sqrt(vv), False
            if vv < margin * margin:
                return math.sqrt(vv), False
        if vv - vw <= 1e-13 * vv:
            break
        if any(w == s for s in simplex):
            break
        simplex.append(w)
        res = _closest_on_simplex(simplex)
        if res is None:
            return 0.0, True
        p, simplex = res
        pp = _dot(p, p)
        if pp >= vv:
            # no progress: numerical floor reached
            break
        v, vv = p, pp
    return math.sqrt(vv), False


def _penetration_depth(va: np.ndarray, na: np.ndarray, vb: np.ndarray, nb: np.ndarray) -> float:
    """Minimum overlap over the facet normals of both shapes (separating-axis estimate).

    This bounds the true penetration depth from above; a non-positive value
    means a separating facet plane exists.
    """
    normals = np.vstack([na, nb])
    pa = va @ normals.T
    pb = vb @ normals.T
    overlap = np.minimum(pa.max(axis=0) - pb.min(axis=0), pb.max(axis=0) - pa.min(axis=0))
    return float(overlap.min())


def _ordered(a: ConvexShape, pa: Pose, b: ConvexShape, pb: Pose):
    va, vb = a.posed(pa), b.posed(pb)
    if (len(va), va.tobytes()) > (len(vb), vb.tobytes()):
        return vb, va
    return va, vb


def convex_distance(a: ConvexShape, pa: Pose, b: ConvexShape, pb: Pose) -> Separation:
    """Minimum distance between two posed convex shapes."""
    va, vb = _ordered(a, pa, b, pb)
    dist, hit = _gjk(va, vb)
    return Separation(0.0 if hit else dist, hit)


def signed_separation(a: ConvexShape, pa: Pose, b: ConvexShape, pb: Pose) -> float:
    """Separation when apart, minus the (separating-axis) penetration depth when overlapping."""
    va, vb = a.posed(pa), b.posed(pb)
    dist, hit = _gjk(va, vb)
    if not hit:
        return dist
    na = a.face_normals @ pa.rotation_matrix.T
    nb = b.face_normals @ pb.rotation_matrix.T
    return -max(_penetration_depth(va, na, vb, nb), 0.0)


def model_separation(a: CollisionModel, pa: Pose, b: CollisionModel, pb: Pose) -> Separation:
    """Smallest part-to-part separation between two posed collision models."""
    best = math.inf
    for sa in a.parts:
        for sb in b.parts:
            s = convex_distance(sa, pa, sb, pb)
            if s.intersecting:
                return Separation(0.0, True)
            best = min(best, s.separation)
    return Separation(best, False)


def model_signed_separation(a: CollisionModel, pa: Pose, b: CollisionModel, pb: Pose) -> float:
    return min(signed_separation(sa, pa, sb, pb) for sa in a.parts for sb in b.parts)


def build_collision_model(c: PointCloud, eps: float = 0.01, min_pts: int = 5,
                          k: int = 16, std_ratio: float = 2.0) -> CollisionModel:
    """Outlier-filter ``c``, cluster it, and wrap each cluster in a convex hull."""
    if len(c) == 0:
        raise NoValidParts("empty cloud")
    pts = remove_statistical_outliers(c, k, std_ratio).points if len(c) > k else c.points
    clusters, _ = cluster(pts, eps, min_pts)
    parts = []
    for idx in clusters:
        if len(idx) < 4:
            continue
        try:
            parts.append(convex_hull(pts[idx]))
        except Degenerate:
            continue
    if not parts:
        raise NoValidParts(f"no cluster of {c.label!r} yields a valid convex hull")
    return CollisionModel(tuple(parts))


def build_collision_model_from_parts(clouds: Sequence[PointCloud], eps: float = 0.01, min_pts: int = 5,
                                     k: int = 16, std_ratio: float = 2.0) -> CollisionModel:
    """Collision model for an object whose cloud arrives pre-split into convex-ish parts."""
    parts = []
    for cloud in clouds:
        try:
            parts.extend(build_collision_model(cloud, eps, min_pts, k, std_ratio).parts)
        except NoValidParts:
            continue
    if not parts:
        raise NoValidParts("no part yields a valid convex hull")
    return CollisionModel(tuple(parts))
