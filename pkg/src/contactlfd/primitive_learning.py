"""Segmentation of hand-object contact into Make/Maintain/Break primitives and policy learning.

Relative poses inside a MaintainContact track are anchored to *reference
objects*. The anchor starts as the held object itself (its own pose at
primitive start), switches to an object whenever the held object newly
makes contact with it, and stays there after the contact ends. Between the
end of one contact episode and the start of the next the track blends
linearly from the old anchor to the new one, so the re-anchored trajectory
stays continuous when objects sit at different places during execution.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .contact_analysis import ContactLocation, DemoContacts, contact_locations
from .demo import Demonstration
from .errors import MissingPoseTrack, NoContactPoints, OverlappingContacts, WrongPrimitiveKind
from .geometry import CollisionModel, PointCloud, Pose, interpolate_pose, invert
from .pose_estimation import PoseEstimate


class PrimitiveKind(str, Enum):
    MAKE = "MakeContact"
    MAINTAIN = "MaintainContact"
    BREAK = "BreakContact"


@dataclass(frozen=True)
class MakeContactParams:
    locations: tuple
    approach: np.ndarray
    manual_override: Optional[tuple] = None

    def __post_init__(self):
        if not self.locations and not self.manual_override:
            raise ValueError("MakeContact needs at least one contact location")

    def effective_locations(self) -> tuple:
        return tuple(self.manual_override) if self.manual_override else tuple(self.locations)


@dataclass(frozen=True)
class KeyMoment:
    frame: int
    timestamp: float
    reference: str
    relative_poses: dict
    contact_set: frozenset
    apart_set: frozenset = frozenset()

    def relative_pose(self, target: str) -> Pose:
        return self.relative_poses[(target, self.reference)]


@dataclass(frozen=True)
class TrackEntry:
    """Held-object pose at one demonstration frame.

    ``pose`` is relative to ``reference``; when ``weight > 0`` the scene pose
    is interpolated towards ``blend_pose`` relative to ``blend_reference``.
    A reference equal to the held object's own name means its pose at
    primitive start.
    """

    timestamp: float
    frame: int
    reference: str
    pose: Pose
    blend_reference: Optional[str] = None
    blend_pose: Optional[Pose] = None
    weight: float = 0.0

    def scene_pose(self, anchors: dict) -> Pose:
        a = anchors[self.reference] @ self.pose
        if self.weight <= 0.0 or self.blend_reference is None:
            return a
        b = anchors[self.blend_reference] @ self.blend_pose
        return interpolate_pose(a, b, self.weight)


@dataclass(frozen=True)
class MaintainContactParams:
    key_moments: tuple
    dense_track: tuple

    def __post_init__(self):
        frames = [k.frame for k in self.key_moments]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("key moments must be strictly increasing in frame")
        ts = [e.timestamp for e in self.dense_track]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("dense track timestamps must be strictly increasing")


@dataclass(frozen=True)
class BreakContactParams:
    final_pose: Pose
    reference: str
    manual_override: Optional[Pose] = None

    def effective_pose(self) -> Pose:
        return self.manual_override if self.manual_override is not None else self.final_pose


@dataclass(frozen=True)
class Primitive:
    kind: PrimitiveKind
    target: str
    span: tuple
    params: object = None

    def __post_init__(self):
        s, e = self.span
        if s > e:
            raise ValueError(f"span start {s} after end {e}")

    @property
    def degenerate(self) -> bool:
        """A MaintainContact from a touch too short to own any frame of its own."""
        return self.kind is PrimitiveKind.MAINTAIN and isinstance(self.params, MaintainContactParams) \
            and len(self.params.dense_track) <= 1


@dataclass(frozen=True)
class ObjectModel:
    cloud: PointCloud
    collision: CollisionModel
    symmetry_axis: Optional[np.ndarray] = None
    phantom: bool = False


@dataclass(frozen=True)
class Policy:
    primitives: tuple
    object_models: dict
    frame_rate: float = 30.0
    steps: tuple = ()
    initial_poses: dict = field(default_factory=dict)

    def __post_init__(self):
        for p in self.primitives:
            if p.target not in self.object_models:
                raise ValueError(f"primitive target {p.target!r} has no model")


def segment_primitives(hand_timelines: dict) -> list[Primitive]:
    """Kinds and spans only; parameters are attached by :func:`learn_policy`.

    Each in-contact run (s, e) becomes Make (s, s), Maintain (s+1, e-1) and
    Break (e, e). Runs shorter than three frames keep all three primitives;
    their Maintain span is widened to (s, e) and collapses at execution.
    """
    runs = []
    for name, tl in hand_timelines.items():
        for s, e in tl.intervals():
            runs.append((s, e, name))
    runs.sort()
    for (s0, e0, a), (s1, e1, b) in zip(runs, runs[1:]):
        if s1 <= e0:
            raise OverlappingContacts(f"hand touches {a!r} and {b!r} simultaneously at frame {s1}")
    out = []
    for s, e, name in runs:
        out.append(Primitive(PrimitiveKind.MAKE, name, (s, s)))
        out.append(Primitive(PrimitiveKind.MAINTAIN, name, (s + 1, e - 1) if e - s >= 2 else (s, e)))
        out.append(Primitive(PrimitiveKind.BREAK, name, (e, e)))
    return out


def _pose_at(tracks: dict, name: str, frame: int) -> Optional[Pose]:
    track = tracks.get(name)
    if track is None:
        return None
    est = track[frame]
    return est.pose if isinstance(est, PoseEstimate) else None


def _require(tracks: dict, name: str, frame: int) -> Pose:
    p = _pose_at(tracks, name, frame)
    if p is None:
        raise MissingPoseTrack(f"no pose for {name!r} at frame {frame}")
    return p


def _contact_partners(contacts: DemoContacts, target: str, frame: int) -> set:
    out = set()
    for (a, b), tl in contacts.objects.items():
        if tl.states[frame] and target in (a, b):
            out.add(b if a == target else a)
    return out


def _nearest(contacts: DemoContacts, target: str, candidates, frame: int) -> Optional[str]:
    best, best_d = None, np.inf
    for other in sorted(candidates):
        d = contacts.distance(target, other, frame)
        if d is not None and d < best_d:
            best, best_d = other, d
    return best


def _anchor_plan(contacts: DemoContacts, target: str, s: int, e: int) -> list:
    """Per-frame (anchor, next (onset, object) or None, blend_start) for frames s..e."""
    partners_at_start = _contact_partners(contacts, target, s)
    anchor = target
    current = set(partners_at_start)
    episodes = []  # (onset frame, object)
    for f in range(s + 1, e + 1):
        now = _contact_partners(contacts, target, f)
        new = now - current
        if new:
            episodes.append((f, _nearest(contacts, target, new, f)))
        current = now
    plan = []
    onset_iter = iter(episodes)
    nxt = next(onset_iter, None)
    blend_start = s
    for f in range(s, e + 1):
        while nxt is not None and nxt[0] <= f:
            anchor = nxt[1]
            nxt = next(onset_iter, None)
        if anchor != target and anchor in _contact_partners(contacts, target, f):
            blend_start = f + 1
        plan.append((anchor, nxt, blend_start))
    return plan


def _key_frames(demo: Demonstration, contacts: DemoContacts, s: int, e: int) -> list[int]:
    frames = {s, e}
    for tl in contacts.objects.values():
        for f, _ in tl.events:
            if s <= f <= e:
                frames.add(f)
    for name in demo.objects:
        present = [demo.frames[f].get(name) is not None for f in range(len(demo.frames))]
        for f in range(max(s, 1), e + 1):
            if present[f] != present[f - 1]:
                frames.add(f)
    return sorted(frames)


def _learn_maintain(demo, contacts, tracks, target, s, e, apart_margin) -> MaintainContactParams:
    fps = demo.frame_rate
    start_pose = _require(tracks, target, s)
    plan = _anchor_plan(contacts, target, s, e)

    def rel(ref, f):
        tp = _require(tracks, target, f)
        if ref == target:
            return invert(start_pose) @ tp
        return invert(_require(tracks, ref, f)) @ tp

    dense = []
    refs = {}
    for f, (anchor, nxt, blend_start) in zip(range(s, e + 1), plan):
        entry = TrackEntry((f - s) / fps, f, anchor, rel(anchor, f))
        if nxt is not None and f >= blend_start and anchor not in _contact_partners(contacts, target, f):
            onset, other = nxt
            w = (f - blend_start) / (onset - blend_start)
            entry = replace(entry, blend_reference=other, blend_pose=rel(other, f), weight=float(w))
        dense.append(entry)
        refs[f] = anchor

    keys = []
    for f in _key_frames(demo, contacts, s, e):
        ref = refs[f]
        poses = {(target, ref): rel(ref, f)}
        for other in _contact_partners(contacts, target, f):
            if _pose_at(tracks, other, f) is not None:
                poses[(target, other)] = rel(other, f)
        in_contact = frozenset(pair for pair, tl in contacts.objects.items() if tl.states[f])
        apart = frozenset(pair for pair, tl in contacts.objects.items()
                          if not tl.states[f] and contacts.distances[pair][f] is not None
                          and contacts.distances[pair][f] > apart_margin)
        keys.append(KeyMoment(f, (f - s) / fps, ref, poses, in_contact, apart))
    return MaintainContactParams(tuple(keys), tuple(dense))


def _learn_make(demo, tracks, target, model: PointCloud, s, e, d_contact, eps, min_pts) -> MakeContactParams:
    last_err = None
    for f in range(s, e + 1):
        hand = demo.frames[f].hand
        pose = _pose_at(tracks, target, f)
        if hand is None or len(hand) == 0 or pose is None:
            continue
        try:
            locs = contact_locations(model, pose, hand, d_contact, eps, min_pts)
        except NoContactPoints as exc:
            last_err = exc
            continue
        hand_model = invert(pose).apply(hand.centroid)
        approach = locs[0].point - hand_model
        n = np.linalg.norm(approach)
        approach = approach / n if n > 1e-9 else np.array([0.0, 0.0, -1.0])
        return MakeContactParams(tuple(locs), approach)
    raise last_err or MissingPoseTrack(f"no usable hand observation of {target!r} in frames {s}..{e}")


def learn_policy(demo: Demonstration, primitives, contacts: DemoContacts, pose_tracks: dict,
                 object_models: dict, d_contact: float = 0.010, eps: float = 0.01, min_pts: int = 5) -> Policy:
    """Attach learned parameters to segmented primitives.

    ``pose_tracks`` maps object name to a per-frame list of PoseEstimate or
    MISSING; ``object_models`` maps name to :class:`ObjectModel`.
    """
    apart_margin = 2.0 * contacts.params.d_break
    out = []
    for prim in primitives:
        s, e = prim.span
        t = prim.target
        if t not in pose_tracks:
            raise MissingPoseTrack(f"no pose track for {t!r}")
        if prim.kind is PrimitiveKind.MAKE:
            # the Make span is a single frame; search the whole touch for a usable hand view
            run_end = next(p.span[1] for p in primitives if p.kind is PrimitiveKind.BREAK
                           and p.target == t and p.span[0] >= s)
            params = _learn_make(demo, pose_tracks, t, object_models[t].cloud, s, run_end, d_contact, eps, min_pts)
        elif prim.kind is PrimitiveKind.MAINTAIN:
            params = _learn_maintain(demo, contacts, pose_tracks, t, s, e, apart_margin)
        else:
            tp = _require(pose_tracks, t, e)
            others = [o for o in demo.objects if o != t and _pose_at(pose_tracks, o, e) is not None
                      and not object_models[o].phantom]
            ref = _nearest(contacts, t, others, e)
            if ref is None:
                raise MissingPoseTrack(f"no reference object visible when releasing {t!r} at frame {e}")
            params = BreakContactParams(invert(_require(pose_tracks, ref, e)) @ tp, ref)
        out.append(replace(prim, params=params))
    initial = {}
    for name, track in pose_tracks.items():
        first = next((est for est in track if isinstance(est, PoseEstimate)), None)
        if first is not None:
            initial[name] = first.pose
    return Policy(tuple(out), dict(object_models), demo.frame_rate, tuple(demo.meta.steps), initial)


def override_place_pose(policy: Policy, primitive_index: int, pose: Pose) -> Policy:
    prim = policy.primitives[primitive_index]
    if prim.kind is not PrimitiveKind.BREAK:
        raise WrongPrimitiveKind(f"primitive {primitive_index} is {prim.kind.value}, not BreakContact")
    new = replace(prim, params=replace(prim.params, manual_override=pose))
    prims = list(policy.primitives)
    prims[primitive_index] = new
    return replace(policy, primitives=tuple(prims))


def override_contact_locations(policy: Policy, primitive_index: int, locations) -> Policy:
    prim = policy.primitives[primitive_index]
    if prim.kind is not PrimitiveKind.MAKE:
        raise WrongPrimitiveKind(f"primitive {primitive_index} is {prim.kind.value}, not MakeContact")
    locs = tuple(l if isinstance(l, ContactLocation) else ContactLocation(np.asarray(l, float), 1) for l in locations)
    new = replace(prim, params=replace(prim.params, manual_override=locs))
    prims = list(policy.primitives)
    prims[primitive_index] = new
    return replace(policy, primitives=tuple(prims))
