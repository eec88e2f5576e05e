import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlfd.contact_analysis import (ABSENT, ContactEvent, ContactTimeline, HysteresisParams, analyze_contacts,
                                         bidirectional_contacts, contact_locations, count_transitions,
                                         distance_series, hysteresis_forward, read_timeline_csv, write_timeline_csv)
from contactlfd.demo import HAND
from contactlfd.errors import NoContactPoints, UnknownObject
from contactlfd.generator import HandSpec, ObjectSpec, ScenarioSpec, generate_demo
from contactlfd.geometry import PointCloud, Pose
from contactlfd.scenarios import BOWL, SINK
from contactlfd.shapes import sample_surface

P = HysteresisParams(0.005, 0.010)
series = st.lists(st.one_of(st.none(), st.floats(0.0, 0.02)), min_size=1, max_size=50)


def test_params_validated():
    with pytest.raises(ValueError):
        HysteresisParams(0.01, 0.005)
    with pytest.raises(ValueError):
        HysteresisParams(0.0, 0.005)


def test_forward_hand_evaluated():
    d = [0.012, 0.006, 0.004, 0.007, 0.011]
    assert hysteresis_forward(d, P, False) == [False, False, True, True, False]


def test_forward_trivial_cases():
    assert hysteresis_forward([0.02] * 6, P, False) == [False] * 6
    assert hysteresis_forward([0.007] * 6, P, True) == [True] * 6
    assert hysteresis_forward([0.007] * 6, P, False) == [False] * 6
    # absent frames hold the state
    assert hysteresis_forward([0.001, ABSENT, 0.02, ABSENT], P, False) == [True, True, False, False]


def test_bidirectional_examples():
    desc = [0.02, 0.015, 0.009, 0.006, 0.004, 0.002, 0.001]
    out = bidirectional_contacts(desc, P)
    assert out == hysteresis_forward(desc, P, False)
    tl = ContactTimeline.from_states(("a", "b"), out)
    assert [e for _, e in tl.events] == [ContactEvent.MAKE]
    assert bidirectional_contacts([0.001], P) == [True]


def test_bidirectional_dead_band_picks_fewer_changes():
    # one crossing, then oscillation inside the dead band that ends below d_make
    d = [0.02, 0.004, 0.008, 0.006, 0.009, 0.007, 0.004]
    fwd = hysteresis_forward(d, P, False)
    rev = hysteresis_forward(d[::-1], P, True)[::-1]
    out = bidirectional_contacts(d, P)
    assert count_transitions(out) <= max(count_transitions(fwd), count_transitions(rev))
    assert count_transitions(out) == min(count_transitions(fwd), count_transitions(rev))


@given(series)
@settings(max_examples=300)
def test_transitions_only_where_thresholds_allow(d):
    out = hysteresis_forward(d, P, False)
    prev = False
    for x, s in zip(d, out):
        if s != prev:
            assert x is not None
            assert (s and x < P.d_make) or (not s and x > P.d_break)
        prev = s


@given(series)
@settings(max_examples=300)
def test_chosen_count_is_min_when_passes_differ(d):
    first, last = d[0], d[-1]
    fwd = hysteresis_forward(d, P, first is not None and first < P.d_make)
    rev = hysteresis_forward(d[::-1], P, last is not None and last < P.d_make)[::-1]
    out = bidirectional_contacts(d, P)
    if fwd != rev:
        assert count_transitions(out) == min(count_transitions(fwd), count_transitions(rev))
    else:
        assert out == fwd


@given(series)
@settings(max_examples=300)
def test_reversal_symmetry_when_passes_agree(d):
    first, last = d[0], d[-1]
    fwd = hysteresis_forward(d, P, first is not None and first < P.d_make)
    rev = hysteresis_forward(d[::-1], P, last is not None and last < P.d_make)[::-1]
    if fwd == rev:
        assert bidirectional_contacts(d[::-1], P) == bidirectional_contacts(d, P)[::-1]


@given(st.lists(st.booleans(), min_size=1, max_size=40))
def test_timeline_events_are_transitions(states):
    tl = ContactTimeline.from_states(("a", "b"), states)
    assert len(tl.events) == count_transitions(states)
    kinds = [k for _, k in tl.events]
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    covered = set()
    for s, e in tl.intervals():
        covered.update(range(s, e + 1))
    assert covered == {i for i, s in enumerate(states) if s}


# -- distance series on generated demos ----------------------------------------

@pytest.fixture(scope="module")
def resting_demo():
    objects = {
        "sink": ObjectSpec(SINK, Pose.identity(), spacing=0.008),
        "bowl": ObjectSpec(BOWL, Pose.from_translation([0, 0, 0.0105]), [0, 0, 1]),
    }
    spec = ScenarioSpec(objects, [{"type": "touch", "object": "bowl", "frame": 15, "location": [0, 0.075, 0.06],
                                   "approach": [0, 0, -1]},
                                  {"type": "release", "object": "bowl", "frame": 20},
                                  {"type": "disappear", "object": "bowl", "frame": 36}],
                        40, 30.0, 0.0005, 3, HandSpec())
    demo, truth = generate_demo(spec)
    return demo, truth


def test_resting_object_is_close_throughout(resting_demo):
    demo, _ = resting_demo
    d = distance_series(demo, "bowl", "sink")
    assert all(x < P.d_make for x in d[:36])


def test_hand_series_u_shaped_and_absent(resting_demo):
    demo, _ = resting_demo
    d = distance_series(demo, HAND, "bowl")
    near = int(np.argmin([x if x is not None else np.inf for x in d]))
    assert 15 <= near <= 20
    assert d[0] > d[10] > d[15] and d[35] > d[25] > d[20]
    assert all(x is ABSENT for x in d[36:])
    with pytest.raises(UnknownObject):
        distance_series(demo, "bowl", "nope")


def test_analyze_contacts_and_csv_roundtrip(resting_demo, tmp_path):
    demo, truth = resting_demo
    c = analyze_contacts(demo)
    assert c.hand["bowl"].intervals() == [(15, 20)]
    assert c.objects[("bowl", "sink")].states[0]
    write_timeline_csv(tmp_path / "t.csv", c)
    back = read_timeline_csv(tmp_path / "t.csv")
    d, s = back[("bowl", "sink")]
    assert s == list(c.objects[("bowl", "sink")].states)
    assert d == c.distances[("bowl", "sink")]
    assert analyze_contacts(demo, hand_only=True).objects == {}


# -- contact locations ---------------------------------------------------------

@pytest.fixture(scope="module")
def bowl_model():
    return PointCloud(sample_surface(BOWL, 0.003, np.random.default_rng(2)), "bowl")


def blob(center, r=0.008, seed=0):
    pts = sample_surface({"type": "sphere", "radius": r}, 0.002, np.random.default_rng(seed))
    return PointCloud(pts + center)


def test_one_location_on_rim(bowl_model):
    rim = np.array([0.0, 0.075, 0.06])
    hand = blob(rim + [0, 0, 0.0085])
    locs = contact_locations(bowl_model, Pose.identity(), hand, 0.01, 0.01, 5)
    assert len(locs) == 1
    assert np.linalg.norm(locs[0].point - rim) < 0.01


def test_pinch_gives_two_antipodal_locations():
    cup = {"type": "cylinder", "radius": 0.04, "z0": 0.0, "z1": 0.1}
    model = PointCloud(sample_surface(cup, 0.003, np.random.default_rng(5)))
    hand = PointCloud(np.vstack([blob([0.0485, 0, 0.05]).points, blob([-0.0485, 0, 0.05], seed=1).points]))
    locs = contact_locations(model, Pose.identity(), hand, 0.01, 0.01, 5)
    assert len(locs) == 2
    a, b = locs[0].point, locs[1].point
    np.testing.assert_allclose((a + b)[:2], 0.0, atol=0.005)
    assert abs(abs(a[0] - b[0]) - 0.08) < 0.01


def test_far_hand_raises(bowl_model):
    with pytest.raises(NoContactPoints):
        contact_locations(bowl_model, Pose.identity(), blob([0.5, 0, 0]), 0.01)


def test_locations_invariant_to_joint_rigid_motion(bowl_model):
    rim = np.array([0.0, 0.075, 0.06])
    hand = blob(rim + [0, 0, 0.0085])
    base = contact_locations(bowl_model, Pose.identity(), hand, 0.01)
    m = Pose.from_axis_angle([1, 2, 3], 0.7, [0.3, -0.2, 0.5])
    moved = contact_locations(bowl_model, m, PointCloud(m.apply(hand.points)), 0.01)
    assert len(base) == len(moved)
    for a, b in zip(base, moved):
        np.testing.assert_allclose(a.point, b.point, atol=1e-9)
        assert a.support == b.support
