import numpy as np
import pytest

from contactlfd.contact_analysis import ContactTimeline
from contactlfd.errors import OverlappingContacts, WrongPrimitiveKind
from contactlfd.geometry import Pose, pose_distance
from contactlfd.pipeline import primitives_summary
from contactlfd.primitive_learning import (PrimitiveKind, override_contact_locations, override_place_pose,
                                           segment_primitives)

K = PrimitiveKind


def timeline(name, n, runs):
    states = [False] * n
    for s, e in runs:
        for i in range(s, e + 1):
            states[i] = True
    return ContactTimeline.from_states(("hand", name), states)


def test_single_touch():
    prims = segment_primitives({"cup": timeline("cup", 60, [(10, 50)])})
    assert [(p.kind, p.span) for p in prims] == [(K.MAKE, (10, 10)), (K.MAINTAIN, (11, 49)), (K.BREAK, (50, 50))]


def test_no_contact():
    assert segment_primitives({"cup": timeline("cup", 60, [])}) == []


def test_two_objects_in_time_order():
    prims = segment_primitives({"b": timeline("b", 100, [(60, 80)]), "a": timeline("a", 100, [(5, 30)])})
    assert len(prims) == 6
    assert [p.target for p in prims] == ["a"] * 3 + ["b"] * 3
    assert [p.kind for p in prims] == [K.MAKE, K.MAINTAIN, K.BREAK] * 2


def test_short_touch_keeps_three_primitives():
    prims = segment_primitives({"cup": timeline("cup", 20, [(5, 6)])})
    assert [p.span for p in prims] == [(5, 5), (5, 6), (6, 6)]


def test_overlapping_contacts():
    with pytest.raises(OverlappingContacts):
        segment_primitives({"a": timeline("a", 50, [(5, 30)]), "b": timeline("b", 50, [(20, 40)])})


def test_spans_cover_each_contact_run():
    tls = {"a": timeline("a", 200, [(5, 30), (100, 140)]), "b": timeline("b", 200, [(50, 70)])}
    prims = segment_primitives(tls)
    for name, tl in tls.items():
        frames = set()
        for p in prims:
            if p.target == name:
                frames.update(range(p.span[0], p.span[1] + 1))
        assert frames == {i for i, s in enumerate(tl.states) if s}


# -- learned dishwash policy ---------------------------------------------------

def test_dishwash_primitives_match_sidecar(dishwash):
    _, _, truth, res = dishwash
    assert primitives_summary(res.primitives) == truth["primitives"]
    kinds = [p.kind for p in res.policy.primitives]
    assert kinds == [K.MAKE, K.MAINTAIN, K.BREAK] * 3


def test_dishwash_key_moment_at_water_contact(dishwash):
    _, _, truth, res = dishwash
    states = next(c["states"] for c in truth["object_contacts"] if set(c["pair"]) == {"bowl", "water"})
    first_wet = states.index(1)
    maintain = next(p for p in res.policy.primitives if p.kind is K.MAINTAIN and p.target == "bowl")
    wet = [k for k in maintain.params.key_moments if ("bowl", "water") in k.contact_set]
    assert wet, "no key moment with the bowl under the water"
    assert abs(wet[0].frame - first_wet) <= 1
    assert wet[0].reference == "water"
    assert any(("bowl", "sink") in k.contact_set for k in maintain.params.key_moments)
    assert maintain.params.key_moments[0].frame == maintain.span[0]
    assert maintain.params.key_moments[-1].frame == maintain.span[1]


def test_key_moment_relative_pose_matches_sidecar(dishwash):
    # water and bowl spin freely about z, so compare the reconstructed bowl pose
    # (tracked reference composed with the learned relative pose) up to that spin
    _, _, truth, res = dishwash
    maintain = next(p for p in res.policy.primitives if p.kind is K.MAINTAIN and p.target == "bowl")
    for k in maintain.params.key_moments:
        rf = maintain.span[0] if k.reference == "bowl" else k.frame
        got = res.pose_tracks[k.reference][rf].pose @ k.relative_pose("bowl")
        exp = Pose.from_dict(truth["poses"]["bowl"][k.frame])
        assert np.linalg.norm(got.translation - exp.translation) < 0.003
        axis_cos = (got.rotation_matrix @ [0, 0, 1]) @ (exp.rotation_matrix @ [0, 0, 1])
        assert axis_cos > np.cos(np.radians(2.0))


def test_dense_track_covers_maintain_frames(dishwash):
    _, _, _, res = dishwash
    for p in res.policy.primitives:
        if p.kind is K.MAINTAIN:
            frames = [e.frame for e in p.params.dense_track]
            assert frames[0] >= p.span[0] and frames[-1] <= p.span[1]
            assert len(frames) >= 0.9 * (p.span[1] - p.span[0] + 1)
            for e in p.params.dense_track:
                assert 0.0 <= e.weight <= 1.0


def test_make_locations_on_object(dishwash):
    _, _, _, res = dishwash
    for p in res.policy.primitives:
        if p.kind is K.MAKE:
            model = res.policy.object_models[p.target].cloud.points
            for loc in p.params.locations:
                assert np.min(np.linalg.norm(model - loc.point, axis=1)) < 0.01
            assert abs(np.linalg.norm(p.params.approach) - 1.0) < 1e-9


def test_break_place_pose_relative_to_sink(dishwash):
    _, _, truth, res = dishwash
    brk = next(p for p in res.policy.primitives if p.kind is K.BREAK and p.target == "bowl")
    assert brk.params.reference == "sink"
    e = brk.span[1]
    exp = Pose.from_dict(truth["poses"]["sink"][e]).inverse() @ Pose.from_dict(truth["poses"]["bowl"][e])
    dp, _ = pose_distance(brk.params.final_pose, exp)
    assert dp < 0.005


def test_overrides(dishwash):
    _, _, _, res = dishwash
    policy = res.policy
    idx = next(i for i, p in enumerate(policy.primitives) if p.kind is K.BREAK and p.target == "bowl")
    target = Pose.from_translation([0.05, 0.0, 0.02])
    new = override_place_pose(policy, idx, target)
    assert new.primitives[idx].params.effective_pose() is target
    assert policy.primitives[idx].params.manual_override is None
    with pytest.raises(WrongPrimitiveKind):
        override_place_pose(policy, idx - 1, target)
    make = idx - 2
    new = override_contact_locations(policy, make, [[0.0, 0.075, 0.06]])
    locs = new.primitives[make].params.effective_locations()
    assert len(locs) == 1 and np.allclose(locs[0].point, [0.0, 0.075, 0.06])
    with pytest.raises(WrongPrimitiveKind):
        override_contact_locations(policy, idx, [[0, 0, 0]])
