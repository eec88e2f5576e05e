import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlfd.errors import Degenerate, EmptyCloud, NoValidParts, TooFewPoints
from contactlfd.geometry import (CollisionModel, ConvexShape, PointCloud, Pose, build_collision_model, cluster,
                                 compose, convex_distance, convex_hull, invert, min_distance,
                                 remove_statistical_outliers, transform_cloud)
from contactlfd.shapes import sample_surface


def mat(p: Pose) -> np.ndarray:
    return p.as_matrix()


def unit_cube(offset=(0.0, 0.0, 0.0)) -> ConvexShape:
    c = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], float)
    return ConvexShape(c + offset)


finite = st.floats(-2.0, 2.0, allow_nan=False)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


@st.composite
def poses(draw):
    axis = np.array([draw(finite), draw(finite), draw(finite)])
    if np.linalg.norm(axis) < 1e-3:
        axis = np.array([0.0, 0.0, 1.0])
    return Pose.from_axis_angle(axis, draw(angles), [draw(finite), draw(finite), draw(finite)])


# -- compose / invert ----------------------------------------------------------

def test_compose_identity():
    p = compose(Pose.identity(), Pose.identity())
    np.testing.assert_allclose(mat(p), np.eye(4), atol=1e-15)


def test_compose_commuting_translations():
    p = compose(Pose.from_translation([1, 0, 0]), Pose.from_translation([0, 2, 0]))
    np.testing.assert_allclose(p.translation, [1, 2, 0], atol=1e-15)


def test_compose_rotation_then_translation_matches_matrix_oracle():
    # hand-written 4x4 matrices: Rz(90) and T(1,0,0)
    Rz = np.array([[0.0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    Tx = np.array([[1.0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    expected = Rz @ Tx
    p = compose(Pose.from_axis_angle([0, 0, 1], math.pi / 2), Pose.from_translation([1, 0, 0]))
    np.testing.assert_allclose(mat(p), expected, atol=1e-12)
    np.testing.assert_allclose(p.translation, [0, 1, 0], atol=1e-12)


def test_invert_cases():
    np.testing.assert_allclose(mat(invert(Pose.identity())), np.eye(4), atol=1e-15)
    np.testing.assert_allclose(invert(Pose.from_translation([1, 2, 3])).translation, [-1, -2, -3])


def test_invert_random_matches_matrix_inverse(rng):
    for _ in range(50):
        p = Pose.from_axis_angle(rng.normal(size=3), rng.uniform(-3, 3), rng.normal(size=3))
        np.testing.assert_allclose(mat(invert(p)), np.linalg.inv(mat(p)), atol=1e-9)
        np.testing.assert_allclose(mat(compose(p, invert(p))), np.eye(4), atol=1e-9)


def test_pose_rejects_bad_quaternion():
    with pytest.raises(ValueError):
        Pose(np.array([2.0, 0, 0, 0]), np.zeros(3))
    with pytest.raises(ValueError):
        Pose(np.array([1.0, 0, 0, 0]), np.array([np.nan, 0, 0]))


@given(poses(), poses(), poses())
def test_compose_associative(a, b, c):
    np.testing.assert_allclose(mat(compose(compose(a, b), c)), mat(compose(a, compose(b, c))), atol=1e-9)


@given(poses())
def test_invert_involution(p):
    np.testing.assert_allclose(mat(invert(invert(p))), mat(p), atol=1e-9)
    np.testing.assert_allclose(mat(compose(p, invert(p))), np.eye(4), atol=1e-9)


# -- transform_cloud -----------------------------------------------------------

def test_transform_cloud_examples():
    c = PointCloud(np.random.default_rng(0).normal(size=(10, 3)), "x")
    same = transform_cloud(Pose.identity(), c)
    np.testing.assert_array_equal(same.points, c.points)
    assert same.label == "x"
    up = transform_cloud(Pose.from_translation([0, 0, 1]), PointCloud([[0, 0, 0]]))
    np.testing.assert_allclose(up.points, [[0, 0, 1]])
    flip = transform_cloud(Pose.from_axis_angle([0, 0, 1], math.pi), PointCloud([[1, 0, 0]]))
    np.testing.assert_allclose(flip.points, [[-1, 0, 0]], atol=1e-12)


@given(poses())
@settings(max_examples=50)
def test_transform_cloud_rigid(p):
    pts = np.random.default_rng(1).normal(size=(20, 3))
    out = transform_cloud(p, PointCloud(pts)).points
    d0 = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d1 = np.linalg.norm(out[:, None] - out[None], axis=-1)
    np.testing.assert_allclose(d0, d1, atol=1e-9)


# -- min_distance --------------------------------------------------------------

def test_min_distance_examples(rng):
    c = rng.normal(size=(30, 3))
    assert min_distance(c, c) == 0.0
    assert min_distance([[0, 0, 0]], [[0, 0, 3]]) == 3.0
    with pytest.raises(EmptyCloud):
        min_distance(np.zeros((0, 3)), c)


def test_min_distance_matches_brute_force(rng):
    for _ in range(20):
        a, b = rng.normal(size=(200, 3)), rng.normal(size=(200, 3)) + rng.normal(size=3)
        brute = np.sqrt(((a[:, None] - b[None]) ** 2).sum(-1)).min()
        assert min_distance(a, b) == pytest.approx(brute, abs=1e-12)


@given(st.integers(1, 500), st.integers(1, 500), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_min_distance_symmetric_and_exact(n, m, seed):
    r = np.random.default_rng(seed)
    a = r.uniform(-1, 1, size=(n, 3))
    b = r.uniform(-1, 1, size=(m, 3)) + r.uniform(-1, 1, size=3)
    assert min_distance(a, b) == min_distance(b, a)
    brute = np.sqrt(((a[:, None] - b[None]) ** 2).sum(-1)).min()
    assert min_distance(a, b) == pytest.approx(brute, abs=1e-12)


# -- outliers ------------------------------------------------------------------

def test_outlier_removal_grid_oracle():
    g = np.array([[x, y, z] for x in range(5) for y in range(5) for z in range(5)], float) * 0.01
    g[62] += [0.1, 0.0, 0.0]  # 10x the grid spacing
    out = remove_statistical_outliers(PointCloud(g), k=8, std_ratio=2.0).points
    # oracle: the statistic computed directly
    d = np.sqrt(((g[:, None] - g[None]) ** 2).sum(-1))
    stat = np.sort(d, axis=1)[:, 1:9].mean(axis=1)
    keep = stat <= stat.mean() + 2.0 * stat.std()
    assert not keep[62]
    np.testing.assert_array_equal(out, g[keep])
    assert len(out) == 124


def test_outlier_removal_degenerate_cases():
    same = PointCloud(np.ones((20, 3)))
    assert len(remove_statistical_outliers(same, 8, 2.0)) == 20
    with pytest.raises(TooFewPoints):
        remove_statistical_outliers(PointCloud(np.zeros((5, 3))), 8, 2.0)


# -- cluster -------------------------------------------------------------------

def components_oracle(pts, eps, min_pts):
    """Connected components of core points on the eps-graph, by union-find."""
    n = len(pts)
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    nb = d <= eps
    core = nb.sum(1) >= min_pts
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i
    for i in range(n):
        for j in range(n):
            if core[i] and core[j] and nb[i, j]:
                parent[find(i)] = find(j)
    return {frozenset(i for i in range(n) if core[i] and find(i) == r) for r in {find(i) for i in range(n) if core[i]}}


def test_cluster_two_blobs(rng):
    eps = 0.01
    a = rng.normal(scale=0.002, size=(40, 3))
    b = a + [10 * eps + 0.02, 0, 0]
    clusters, noise = cluster(np.vstack([a, b]), eps, 5)
    assert len(clusters) == 2
    cores = components_oracle(np.vstack([a, b]), eps, 5)
    assert len(cores) == 2


def test_cluster_trivial():
    c, n = cluster(np.zeros((0, 3)), 0.01, 5)
    assert c == [] and len(n) == 0
    c, n = cluster([[0, 0, 0]], 0.01, 1)
    assert [list(x) for x in c] == [[0]] and len(n) == 0


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_cluster_partition_and_core_components(seed, min_pts):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 0.1, size=(int(r.integers(1, 80)), 3))
    eps = 0.02
    clusters, noise = cluster(pts, eps, min_pts)
    all_idx = np.sort(np.concatenate(clusters + [noise]))
    np.testing.assert_array_equal(all_idx, np.arange(len(pts)))
    # core points of each cluster form exactly the oracle's components
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    core = (d <= eps).sum(1) >= min_pts
    got = {frozenset(int(i) for i in c if core[i]) for c in clusters}
    assert got == components_oracle(pts, eps, min_pts)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_cluster_order_invariant(seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 0.1, size=(60, 3))
    perm = r.permutation(60)
    a, _ = cluster(pts, 0.02, 4)
    b, _ = cluster(pts[perm], 0.02, 4)
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    core = (d <= 0.02).sum(1) >= 4
    ca = {frozenset(int(i) for i in c if core[i]) for c in a}
    cb = {frozenset(int(perm[i]) for i in c if core[perm[i]]) for c in b}
    assert ca == cb


# -- convex hulls and distances ------------------------------------------------

def test_convex_hull_examples(rng):
    corners = unit_cube().vertices
    assert len(convex_hull(corners).vertices) == 8
    with_center = np.vstack([corners, [[0.5, 0.5, 0.5]]])
    h = convex_hull(with_center)
    assert len(h.vertices) == 8
    assert not any(np.allclose(v, 0.5) for v in h.vertices)
    pts = rng.normal(size=(100, 3))
    assert convex_hull(pts).contains(pts, 1e-9).all()
    with pytest.raises(Degenerate):
        convex_hull([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])


def test_convex_distance_examples():
    a, b = unit_cube(), unit_cube()
    s = convex_distance(a, Pose.identity(), b, Pose.from_translation([3, 0, 0]))
    assert s.separation == pytest.approx(2.0, abs=1e-9) and not s.intersecting
    assert convex_distance(a, Pose.identity(), b, Pose.identity()).intersecting


def test_convex_distance_matches_surface_sampling(rng):
    """Oracle: dense samples on both hull surfaces give an upper bound that converges to the true gap."""
    from scipy.spatial import ConvexHull
    for _ in range(10):
        va = rng.normal(scale=0.1, size=(12, 3))
        vb = rng.normal(scale=0.1, size=(12, 3)) + rng.normal(size=3) * 0.4 + [0.4, 0, 0]
        a, b = ConvexShape(va), ConvexShape(vb)
        s = convex_distance(a, Pose.identity(), b, Pose.identity())
        if s.intersecting:
            continue

        def surface(v):
            h = ConvexHull(v)
            out = []
            for tri in h.simplices:
                p0, p1, p2 = v[tri]
                u = rng.uniform(size=(4000, 2))
                flip = u.sum(1) > 1
                u[flip] = 1 - u[flip]
                out.append(p0 + u[:, :1] * (p1 - p0) + u[:, 1:] * (p2 - p0))
                out.append(np.linspace(p0, p1, 200))
                out.append(np.linspace(p1, p2, 200))
                out.append(np.linspace(p2, p0, 200))
            return np.vstack(out)
        est = min_distance(surface(va), surface(vb))
        assert s.separation <= est + 1e-9
        assert est - s.separation < 1e-3


@given(poses(), poses(), poses())
@settings(max_examples=40, deadline=None)
def test_convex_distance_symmetric_and_rigid(pa, pb, common):
    a = ConvexShape(np.random.default_rng(3).normal(scale=0.3, size=(10, 3)))
    b = ConvexShape(np.random.default_rng(4).normal(scale=0.3, size=(10, 3)))
    s1 = convex_distance(a, pa, b, pb)
    s2 = convex_distance(b, pb, a, pa)
    assert s1.intersecting == s2.intersecting
    assert abs(s1.separation - s2.separation) <= 1e-12
    s3 = convex_distance(a, common @ pa, b, common @ pb)
    assert abs(s1.separation - s3.separation) <= 1e-9


# -- collision models ----------------------------------------------------------

def test_collision_model_two_boxes(rng):
    box = {"type": "box", "min": [0, 0, 0], "max": [0.05, 0.05, 0.05]}
    a = sample_surface(box, 0.004, rng)
    b = a + [0.2, 0, 0]
    pts = np.vstack([a, b])
    m = build_collision_model(PointCloud(pts), 0.01, 5)
    assert len(m.parts) == 2
    assert m.contains(pts, 1e-9).mean() >= 0.99


def test_collision_model_sphere(rng):
    pts = sample_surface({"type": "sphere", "radius": 0.05}, 0.004, rng)
    m = build_collision_model(PointCloud(pts), 0.01, 5)
    assert len(m.parts) == 1
    kept = remove_statistical_outliers(PointCloud(pts)).points
    assert m.contains(kept, 1e-9).all()


def test_collision_model_collinear():
    with pytest.raises(NoValidParts):
        build_collision_model(PointCloud([[0, 0, 0], [1, 0, 0], [2, 0, 0]]), 0.01, 1)


def test_collision_model_list_roundtrip(rng):
    m = CollisionModel((ConvexShape(rng.normal(size=(8, 3))),))
    again = CollisionModel.from_list(m.to_list())
    np.testing.assert_array_equal(again.parts[0].vertices, m.parts[0].vertices)
