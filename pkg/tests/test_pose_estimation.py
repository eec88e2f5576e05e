import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlfd.errors import LowFitness, NeverObserved, NoCorrespondences, TooFewPoints
from contactlfd.geometry import PointCloud, Pose, pose_distance, transform_cloud
from contactlfd.pose_estimation import MISSING, IcpParams, best_fit_transform, icp_register, track_poses
from contactlfd.shapes import sample_surface


@pytest.fixture(scope="module")
def mug():
    r = np.random.default_rng(7)
    body = sample_surface({"type": "cylinder", "radius": 0.04, "z0": 0.0, "z1": 0.1}, 0.006, r)
    handle = sample_surface({"type": "box", "min": [0.04, -0.005, 0.03], "max": [0.07, 0.005, 0.08]}, 0.004, r)
    return PointCloud(np.vstack([body, handle]), "mug")


def test_identity_registration(mug):
    est = icp_register(mug, mug, Pose.identity())
    np.testing.assert_allclose(est.pose.as_matrix(), np.eye(4), atol=1e-9)
    assert est.fitness == 1.0
    assert est.rmse == 0.0


def test_translation_recovered(mug):
    obs = transform_cloud(Pose.from_translation([0.02, 0, 0]), mug)
    est = icp_register(mug, obs, Pose.identity())
    np.testing.assert_allclose(est.pose.translation, [0.02, 0, 0], atol=1e-6)


def test_rotation_with_noise(mug):
    truth = Pose.from_axis_angle([0, 0, 1], math.radians(20))
    obs = transform_cloud(truth, mug)
    obs = obs.with_points(obs.points + np.random.default_rng(1).normal(scale=0.0005, size=obs.points.shape))
    est = icp_register(mug, obs, Pose.identity())
    dp, dr = pose_distance(est.pose, truth)
    assert dr < math.radians(1.0) and dp < 0.002


def test_rmse_history_monotone(mug):
    obs = transform_cloud(Pose.from_axis_angle([1, 1, 0], 0.3, [0.01, 0.02, 0]), mug)
    est = icp_register(mug, obs, Pose.identity())
    h = np.array(est.rmse_history)
    assert np.all(np.diff(h) <= 1e-12)
    assert est.iterations == len(h) - 1


def test_errors(mug):
    with pytest.raises(TooFewPoints):
        icp_register(PointCloud([[0, 0, 0], [1, 0, 0]]), mug)
    far = transform_cloud(Pose.from_translation([5, 0, 0]), mug)
    with pytest.raises(NoCorrespondences):
        icp_register(mug, far, Pose.identity())
    half = PointCloud(mug.points[mug.points[:, 2] > 0.095])
    with pytest.raises(LowFitness):
        icp_register(mug, half, Pose.identity(), IcpParams(min_fitness=0.9))


def test_params_validated():
    with pytest.raises(ValueError):
        IcpParams(max_iterations=0)
    with pytest.raises(ValueError):
        IcpParams(correspondence_max_dist=0)
    with pytest.raises(ValueError):
        IcpParams(min_fitness=1.5)


def test_kabsch_exact(rng):
    src = rng.normal(size=(30, 3))
    p = Pose.from_axis_angle(rng.normal(size=3), 1.0, rng.normal(size=3))
    R, t = best_fit_transform(src, p.apply(src))
    np.testing.assert_allclose(R, p.rotation_matrix, atol=1e-12)
    np.testing.assert_allclose(t, p.translation, atol=1e-12)


@given(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
@settings(max_examples=20, deadline=None)
def test_equivariance(rx, ry, rz):
    """Registering R*observed yields R∘pose when noise is zero and fitness is 1."""
    model = PointCloud(sample_surface({"type": "box", "min": [0, 0, 0], "max": [0.08, 0.05, 0.03]}, 0.006,
                                      np.random.default_rng(0)))
    pose = Pose.from_axis_angle([0, 0, 1], 0.1, [0.005, 0, 0])
    obs = transform_cloud(pose, model)
    base = icp_register(model, obs, Pose.identity())
    R = Pose.from_axis_angle([1, 0, 0], rx) @ Pose.from_axis_angle([0, 1, 0], ry) @ Pose.from_axis_angle([0, 0, 1], rz)
    moved = icp_register(model, transform_cloud(R, obs), R)
    assert base.fitness == 1.0 and moved.fitness == 1.0
    np.testing.assert_allclose(moved.pose.as_matrix(), (R @ base.pose).as_matrix(), atol=1e-6)


def test_deterministic(mug):
    obs = transform_cloud(Pose.from_axis_angle([0, 1, 0], 0.2, [0.01, 0, 0]), mug)
    a = icp_register(mug, obs, Pose.identity())
    b = icp_register(mug, obs, Pose.identity())
    assert a.pose.rotation.tobytes() == b.pose.rotation.tobytes()
    assert a.rmse_history == b.rmse_history


def test_track_static(mug):
    frames = [{"mug": mug} for _ in range(10)]
    track = track_poses(mug, frames, "mug")
    assert len(track) == 10
    for est in track:
        np.testing.assert_allclose(est.pose.as_matrix(), np.eye(4), atol=1e-9)


def test_track_translating(mug):
    frames = [{"mug": transform_cloud(Pose.from_translation([0.001 * i, 0, 0]), mug)} for i in range(10)]
    track = track_poses(mug, frames, "mug")
    x = np.array([e.pose.translation[0] for e in track])
    np.testing.assert_allclose(np.diff(x), 0.001, atol=1e-4)


def test_track_missing_frames(mug):
    frames = [{"mug": mug} if i not in (3, 4, 5) else {} for i in range(8)]
    track = track_poses(mug, frames, "mug")
    assert [e is MISSING for e in track] == [False, False, False, True, True, True, False, False]
    assert not MISSING
    with pytest.raises(NeverObserved):
        track_poses(mug, [{} for _ in range(3)], "mug")
