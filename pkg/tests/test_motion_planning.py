import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlfd.errors import DegenerateTrajectory, GoalInCollision, NoSolution
from contactlfd.geometry import CollisionModel, Pose, build_collision_model, PointCloud
from contactlfd.motion_planning import (Attachment, ContactConstraint, Joint, JointPath, KinematicChain, RrtParams,
                                        Scene, SymmetrySpec, alternative_offsets, forward_kinematics, in_collision,
                                        inverse_kinematics, jacobian, match_duration, path_free, plan_rrt_connect,
                                        planar_chain, propose_alternative_poses, random_config, resample,
                                        time_parameterize, tool_error)
from contactlfd.shapes import sample_surface


def box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    corners = [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
    return CollisionModel.from_list([corners])


def arm2(with_geometry=True):
    """Two 0.5 m planar links; each link carries a thin box along its x axis."""
    c = planar_chain([0.5, 0.5])
    if not with_geometry:
        return c
    link = box([0.05, -0.02, -0.02], [0.45, 0.02, 0.02])
    return KinematicChain(c.joints, c.tool_frame, (None, link, link))


# -- kinematics ----------------------------------------------------------------

def test_fk_planar_examples():
    c = arm2(False)
    _, tool = forward_kinematics(c, [0.0, 0.0])
    np.testing.assert_allclose(tool.translation, [1, 0, 0], atol=1e-12)
    _, tool = forward_kinematics(c, [math.pi / 2, 0.0])
    np.testing.assert_allclose(tool.translation, [0, 1, 0], atol=1e-12)
    _, tool = forward_kinematics(c, [0.0, math.pi / 2])
    np.testing.assert_allclose(tool.translation, [0.5, 0.5, 0], atol=1e-12)
    np.testing.assert_allclose(tool.rotation_matrix, Pose.from_axis_angle([0, 0, 1], math.pi / 2).rotation_matrix,
                               atol=1e-12)


def test_fk_prismatic():
    j = Joint(np.array([0, 0, 1.0]), Pose.identity(), (0.0, 0.5), 1.0, 1.0, "prismatic")
    c = KinematicChain((j,), Pose.from_translation([0.1, 0, 0]))
    _, tool = forward_kinematics(c, [0.3])
    np.testing.assert_allclose(tool.translation, [0.1, 0, 0.3], atol=1e-12)


def test_joint_validation():
    with pytest.raises(ValueError):
        Joint(np.zeros(3), Pose.identity(), (0, 1), 1, 1)
    with pytest.raises(ValueError):
        Joint(np.array([0, 0, 1.0]), Pose.identity(), (1, 0), 1, 1)
    with pytest.raises(ValueError):
        Joint(np.array([0, 0, 1.0]), Pose.identity(), (0, 1), 0, 1)


def test_jacobian_matches_finite_differences(chain, rng):
    q = random_config(chain, rng)
    J = jacobian(chain, q)
    _, T0 = forward_kinematics(chain, q)
    h = 1e-6
    for j in range(chain.n_joints):
        dq = q.copy()
        dq[j] += h
        _, T1 = forward_kinematics(chain, dq)
        np.testing.assert_allclose((T1.translation - T0.translation) / h, J[:3, j], atol=1e-5)


def test_ik_planar_example():
    c = arm2(False)
    target = Pose.from_axis_angle([0, 0, 1], math.pi / 2, [0.5, 0.5, 0.0])
    q = inverse_kinematics(c, target, seed=[0.1, 1.2])
    dp, dr = tool_error(c, q, target)
    assert dp < 1e-4 and dr < 1e-3
    np.testing.assert_allclose(q, [0.0, math.pi / 2], atol=1e-3)


def test_ik_unreachable():
    with pytest.raises(NoSolution):
        inverse_kinematics(arm2(False), Pose.from_translation([2.0, 0, 0]))


def test_ik_bundled_round_trip(chain, rng):
    for _ in range(5):
        q = random_config(chain, rng)
        _, target = forward_kinematics(chain, q)
        sol = inverse_kinematics(chain, target, seed=chain.ready)
        dp, dr = tool_error(chain, sol, target)
        assert dp < 1e-4 and dr < 1e-3
        assert chain.within_limits(sol)


# -- collision -----------------------------------------------------------------

def test_in_collision_examples():
    c = arm2()
    wall = Scene({"wall": (box([0.7, -0.1, -0.1], [0.8, 0.1, 0.1]), Pose.identity())})
    assert in_collision(c, [0.0, 0.0], wall)
    assert not in_collision(c, [math.pi / 2, 0.0], wall)
    assert not in_collision(c, [0.0, 0.0], Scene())


def test_margin_is_respected():
    c = arm2()
    # link boxes end at y = 0.02; an obstacle 1 mm above is inside the 2 mm margin
    near = box([0.2, 0.021, -0.1], [0.3, 0.1, 0.1])
    assert in_collision(c, [0.0, 0.0], Scene({"o": (near, Pose.identity())}))
    assert not in_collision(c, [0.0, 0.0], Scene({"o": (near, Pose.identity())}, margin=0.0005))


def test_attached_object_collides():
    c = arm2()
    block = box([0.0, -0.02, -0.02], [0.1, 0.02, 0.02])
    wall = Scene({"wall": (box([1.05, -0.1, -0.1], [1.2, 0.1, 0.1]), Pose.identity())})
    assert not in_collision(c, [0.0, 0.0], wall)
    held = wall.with_attached(Attachment("block", block, Pose.identity()))
    assert in_collision(c, [0.0, 0.0], held)
    assert not in_collision(c, [0.5, 0.0], held)


# -- alternatives --------------------------------------------------------------

def test_alternative_counts():
    sym = SymmetrySpec(np.array([0, 0, 1.0]))
    offs = alternative_offsets(sym)
    assert len(offs) == 36 + 2 * 4
    np.testing.assert_allclose(offs[0].as_matrix(), np.eye(4))
    for k in range(1, 36):
        assert offs[k].rotation_matrix @ [0, 0, 1] == pytest.approx([0, 0, 1])
    assert len(alternative_offsets(SymmetrySpec())) == 1 + 3 * 4
    with pytest.raises(ValueError):
        SymmetrySpec(np.zeros(3))


def test_desired_first_and_band_filter():
    cup = build_collision_model(PointCloud(sample_surface({"type": "cylinder", "radius": 0.04, "z0": 0, "z1": 0.1},
                                                          0.005, np.random.default_rng(0))))
    table = box([-0.3, -0.3, -0.02], [0.3, 0.3, 0.0])
    desired = Pose.from_translation([0, 0, 0.001])
    sym = SymmetrySpec(np.array([0, 0, 1.0]))
    con = ContactConstraint(cup, table, Pose.identity(), 0.005)
    out = propose_alternative_poses(desired, sym, [con])
    assert out[0] is desired or np.allclose(out[0].as_matrix(), desired.as_matrix())
    # symmetry rotations keep the cup on the table; 10 degree tilts lift the rim
    assert 36 <= len(out) < 44
    for p in out[1:]:
        assert con.satisfied(p)
    # the desired pose is never filtered
    far = Pose.from_translation([0, 0, 0.5])
    np.testing.assert_array_equal(propose_alternative_poses(far, sym, [con])[0].as_matrix(), far.as_matrix())


def _hausdorff(a, b):
    d = np.linalg.norm(a[:, None] - b[None], axis=2)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def _ring_cylinder(rng, n_rings=12, per_ring=37):
    """Cylinder samples on rings whose angular spacing (360/37 deg) is finer than, and not a divisor of, 10 deg."""
    pts = []
    for _ in range(n_rings):
        r, z = (0.04, rng.uniform(0, 0.1)) if rng.uniform() < 0.7 else (rng.uniform(0.005, 0.04), rng.choice([0, 0.1]))
        a = rng.uniform(0, 2 * np.pi) + np.arange(per_ring) * 2 * np.pi / per_ring
        pts.append(np.column_stack([r * np.cos(a), r * np.sin(a), np.full(per_ring, z)]))
    return np.vstack(pts)


@given(st.integers(0, 35), st.integers(0, 2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_symmetry_rotations_preserve_symmetric_shape(k, seed):
    off = alternative_offsets(SymmetrySpec(np.array([0, 0, 1.0])))[k]
    pts = sample_surface({"type": "cylinder", "radius": 0.04, "z0": 0, "z1": 0.1}, 0.004, np.random.default_rng(seed))
    moved = off.apply(pts)
    # every rotated sample stays on the same cylinder surface
    np.testing.assert_allclose(np.linalg.norm(moved[:, :2], axis=1), np.linalg.norm(pts[:, :2], axis=1), atol=1e-12)
    np.testing.assert_allclose(moved[:, 2], pts[:, 2], atol=1e-12)
    # set invariance within the chord of the angular step at the largest radius
    ring = _ring_cylinder(np.random.default_rng(seed))
    r = np.max(np.linalg.norm(ring[:, :2], axis=1))
    assert _hausdorff(ring, off.apply(ring)) <= 2 * r * math.sin(math.radians(10) / 2) + 1e-12


# -- RRT -----------------------------------------------------------------------

def test_rrt_empty_scene_direct():
    c = arm2()
    path = plan_rrt_connect(c, Scene(), [0.0, 0.0], [1.0, -0.5])
    assert len(path) <= 3
    np.testing.assert_allclose(path.waypoints[0], [0, 0])
    np.testing.assert_allclose(path.waypoints[-1], [1.0, -0.5])


def test_rrt_around_obstacle():
    c = arm2()
    post = Scene({"post": (box([0.64, 0.64, -0.1], [0.78, 0.78, 0.1]), Pose.identity())})
    start, goal = np.array([0.0, 0.0]), np.array([math.pi / 2, 0.0])
    assert not path_free(c, post, [start, goal], 0.05)
    params = RrtParams(step=0.1, max_iters=20000, rng_seed=3)
    path = plan_rrt_connect(c, post, start, goal, params)
    np.testing.assert_array_equal(path.waypoints[0], start)
    np.testing.assert_array_equal(path.waypoints[-1], goal)
    assert path_free(c, post, path, params.step / 2)
    again = plan_rrt_connect(c, post, start, goal, params)
    np.testing.assert_array_equal(path.waypoints, again.waypoints)


def test_rrt_goal_in_collision():
    c = arm2()
    wall = Scene({"wall": (box([0.7, -0.1, -0.1], [0.8, 0.1, 0.1]), Pose.identity())})
    with pytest.raises(GoalInCollision):
        plan_rrt_connect(c, wall, [math.pi / 2, 0.0], [0.0, 0.0])


# -- timing --------------------------------------------------------------------

def test_trapezoid_closed_forms():
    c = planar_chain([0.5, 0.5], vel=1.0, acc=1.0)
    # distance 1 rad at v=a=1: triangular, T = 2 sqrt(1/1) = 2 s
    tr = time_parameterize(JointPath([[0, 0], [1, 0]]), c)
    assert tr.duration == pytest.approx(2.0, abs=1e-12)
    # distance 0.25 rad: triangular, T = 2 sqrt(0.25) = 1 s
    tr = time_parameterize(JointPath([[0, 0], [0.25, 0]]), c)
    assert tr.duration == pytest.approx(1.0, abs=1e-12)
    # distance 3 rad at v=1, a=2: trapezoid, T = d/v + v/a = 3.5 s
    c2 = planar_chain([0.5, 0.5], vel=1.0, acc=2.0)
    tr = time_parameterize(JointPath([[0, 0], [3.0, 0]]), c2)
    assert tr.duration == pytest.approx(3.5, abs=1e-12)
    np.testing.assert_allclose(tr.at(1.75), [1.5, 0.0], atol=1e-12)


def test_synchronized_joints_share_profile():
    c = planar_chain([0.5, 0.5], vel=1.0, acc=1.0)
    tr = time_parameterize(JointPath([[0, 0], [1.0, 0.5]]), c)
    np.testing.assert_allclose(tr.configs[:, 1], 0.5 * tr.configs[:, 0], atol=1e-12)


def test_zero_length_path():
    c = planar_chain([0.5, 0.5])
    tr = time_parameterize(JointPath([[0.3, 0.1], [0.3, 0.1]]), c)
    assert tr.duration == 0.0 and len(tr.times) == 1
    with pytest.raises(DegenerateTrajectory):
        match_duration(tr, 1.0)
    assert match_duration(tr, 0.0) is tr


def test_match_duration_stretches_only():
    c = planar_chain([0.5, 0.5])
    tr = time_parameterize(JointPath([[0, 0], [1, 0]]), c)
    long = match_duration(tr, 5.0)
    assert long.duration == 5.0
    np.testing.assert_array_equal(long.configs, tr.configs)
    assert match_duration(tr, 1.0) is tr
    with pytest.raises(ValueError):
        match_duration(tr, -1.0)


def test_resample_grid():
    c = planar_chain([0.5, 0.5])
    tr = time_parameterize(JointPath([[0, 0], [1, 0]]), c)
    t, q = resample(tr, 100.0)
    assert len(t) == 201
    np.testing.assert_allclose(np.diff(t), 0.01)
    np.testing.assert_allclose(q[-1], [1, 0])
    with pytest.raises(ValueError):
        resample(tr, 0)
