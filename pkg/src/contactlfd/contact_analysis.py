"""Contact timelines from per-frame cloud distances with two-threshold hysteresis."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .demo import HAND, Demonstration
from .errors import NoContactPoints, TooFewPoints
from .geometry import PointCloud, Pose, cluster, min_distance, remove_statistical_outliers

# distance series use None for frames where either cloud is missing
ABSENT = None


class ContactEvent(str, Enum):
    MAKE = "MAKE"
    BREAK = "BREAK"


@dataclass(frozen=True)
class HysteresisParams:
    d_make: float = 0.005
    d_break: float = 0.010

    def __post_init__(self):
        if not (self.d_break > self.d_make > 0):
            raise ValueError("need d_break > d_make > 0")


@dataclass(frozen=True)
class ContactTimeline:
    pair: tuple
    states: tuple
    events: tuple

    @classmethod
    def from_states(cls, pair, states) -> ContactTimeline:
        states = tuple(bool(s) for s in states)
        events = []
        for i in range(1, len(states)):
            if states[i] != states[i - 1]:
                events.append((i, ContactEvent.MAKE if states[i] else ContactEvent.BREAK))
        return cls(tuple(pair), states, tuple(events))

    def intervals(self) -> list[tuple[int, int]]:
        """Maximal in-contact runs as inclusive (start, end) frame pairs."""
        out = []
        start = None
        for i, s in enumerate(self.states):
            if s and start is None:
                start = i
            elif not s and start is not None:
                out.append((start, i - 1))
                start = None
        if start is not None:
            out.append((start, len(self.states) - 1))
        return out


@dataclass(frozen=True)
class ContactLocation:
    point: np.ndarray
    support: int


def count_transitions(states: Sequence[bool]) -> int:
    return sum(1 for a, b in zip(states, states[1:]) if a != b)


def hysteresis_forward(d: Sequence[Optional[float]], p: HysteresisParams, initial: bool) -> list[bool]:
    state = bool(initial)
    out = []
    for x in d:
        if x is not None:
            if state:
                if x > p.d_break:
                    state = False
            elif x < p.d_make:
                state = True
        out.append(state)
    return out


def bidirectional_contacts(d: Sequence[Optional[float]], p: HysteresisParams) -> list[bool]:
    """Run the automaton forward and on the reversed series; keep the calmer result.

    Ties (including identical outputs) go to the forward pass.
    """
    d = list(d)
    if not d:
        return []
    first, last = d[0], d[-1]
    fwd = hysteresis_forward(d, p, first is not None and first < p.d_make)
    rev = hysteresis_forward(d[::-1], p, last is not None and last < p.d_make)[::-1]
    if fwd == rev:
        return fwd
    return rev if count_transitions(rev) < count_transitions(fwd) else fwd


def filter_demo_outliers(demo: Demonstration, k: int = 16, std_ratio: float = 2.0) -> Demonstration:
    """Statistical outlier removal applied once to every cloud of every frame."""
    from .demo import Frame

    def clean(c):
        if c is None or len(c) <= k:
            return c
        return remove_statistical_outliers(c, k, std_ratio)

    frames = [Frame(f.index, {n: clean(c) for n, c in f.clouds.items()}, clean(f.hand)) for f in demo.frames]
    return Demonstration(demo.meta, frames, demo.models, demo.model_parts)


def distance_series(demo: Demonstration, a: str, b: str) -> list[Optional[float]]:
    demo.check_name(a)
    demo.check_name(b)
    out = []
    for frame in demo.frames:
        ca, cb = frame.get(a), frame.get(b)
        if ca is None or cb is None or len(ca) == 0 or len(cb) == 0:
            out.append(ABSENT)
        else:
            out.append(min_distance(ca, cb))
    return out


def contact_locations(object_model: PointCloud, object_pose: Pose, hand_cloud: PointCloud,
                      d_contact: float = 0.010, eps: float = 0.01, min_pts: int = 5) -> list[ContactLocation]:
    """Cluster model points touched by the hand; one location per cluster, in the model frame.

    If the touched points are too sparse to form any density cluster they are
    reported as a single location.
    """
    if len(hand_cloud) == 0 or len(object_model) == 0:
        raise NoContactPoints("empty hand or object cloud")
    posed = object_pose.apply(object_model.points)
    d, _ = cKDTree(hand_cloud.points).query(posed, k=1, distance_upper_bound=d_contact)
    selected = object_model.points[np.isfinite(d) & (d <= d_contact)]
    if len(selected) == 0:
        raise NoContactPoints(f"no point of {object_model.label!r} within {d_contact} m of the hand")
    clusters, _ = cluster(selected, eps, min_pts)
    if not clusters:
        clusters = [np.arange(len(selected))]
    locs = [ContactLocation(selected[idx].mean(axis=0), int(len(idx))) for idx in clusters]
    locs.sort(key=lambda loc: -loc.support)
    return locs


@dataclass
class DemoContacts:
    """All contact timelines of a demonstration plus the distances behind them."""

    hand: dict
    objects: dict
    distances: dict
    params: HysteresisParams

    def in_contact(self, frame: int) -> set:
        return {pair for pair, tl in self.objects.items() if tl.states[frame]}

    def distance(self, a: str, b: str, frame: int) -> Optional[float]:
        key = (a, b) if (a, b) in self.distances else (b, a)
        return self.distances[key][frame]


def object_pairs(names: Sequence[str]) -> list[tuple[str, str]]:
    return list(itertools.combinations(sorted(names), 2))


def analyze_contacts(demo: Demonstration, params: HysteresisParams = HysteresisParams(),
                     hand_only: bool = False) -> DemoContacts:
    """Hand-object timelines, plus object-object ones unless ``hand_only`` (enough for segmentation)."""
    hand, objects, distances = {}, {}, {}
    for name in demo.objects:
        d = distance_series(demo, HAND, name)
        distances[(HAND, name)] = d
        hand[name] = ContactTimeline.from_states((HAND, name), bidirectional_contacts(d, params))
    for a, b in ([] if hand_only else object_pairs(demo.objects)):
        d = distance_series(demo, a, b)
        distances[(a, b)] = d
        objects[(a, b)] = ContactTimeline.from_states((a, b), bidirectional_contacts(d, params))
    return DemoContacts(hand, objects, distances, params)


def write_timeline_csv(path, contacts: DemoContacts):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "pair_a", "pair_b", "distance_m", "state"])
        timelines = list(contacts.hand.values()) + list(contacts.objects.values())
        for tl in timelines:
            a, b = tl.pair
            dist = contacts.distances[(a, b)]
            for i, s in enumerate(tl.states):
                w.writerow([i, a, b, "" if dist[i] is None else repr(dist[i]), int(s)])


def read_timeline_csv(path) -> dict:
    """Inverse of :func:`write_timeline_csv`: pair -> (distances, states)."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["pair_a"], row["pair_b"])
            d, s = out.setdefault(key, ([], []))
            d.append(float(row["distance_m"]) if row["distance_m"] else None)
            s.append(bool(int(row["state"])))
    return out


__all__ = [
    "ABSENT", "ContactEvent", "ContactLocation", "ContactTimeline", "DemoContacts", "HysteresisParams",
    "TooFewPoints", "analyze_contacts", "bidirectional_contacts", "contact_locations", "count_transitions",
    "distance_series", "filter_demo_outliers", "hysteresis_forward", "object_pairs", "read_timeline_csv",
    "write_timeline_csv",
]
