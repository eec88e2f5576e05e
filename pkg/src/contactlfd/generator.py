"""Scripted synthetic demonstrations with a ground-truth sidecar.

A scenario lists objects (analytic shapes with an initial pose), a hand
blob, and time-ordered events:

- ``move``: interpolate an object's pose over ``[start, end]`` frames with a
  smoothstep profile, either to an absolute ``to`` pose or ``by`` a model-frame
  rotation plus a world translation;
- ``touch`` / ``release``: the hand approaches along ``approach`` and stays
  rigidly attached to the touched point until released;
- ``appear`` / ``disappear``.

A ``faucet`` rule shows a water object whenever a lever is turned more than
``on_angle_deg`` away from its initial pose relative to the faucet body.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contact_analysis import HysteresisParams, bidirectional_contacts, object_pairs
from .demo import DemoMeta, Demonstration, Frame
from .errors import InvalidScript
from .geometry import PointCloud, Pose, interpolate_pose, min_distance
from .geometry.transforms import rotation_angle
from .shapes import parts_of, sample_parts, sample_surface

SCENARIO_FORMAT = "contactlfd-scenario"
SCENARIO_VERSION = 1


def _pose(d) -> Pose:
    if isinstance(d, Pose):
        return d
    if "quaternion" in d:
        return Pose.from_dict(d)
    p = Pose.from_translation(d.get("translation", [0, 0, 0]))
    if "axis" in d:
        p = Pose(Pose.from_axis_angle(d["axis"], math.radians(d.get("angle_deg", 0.0))).rotation, p.translation)
    return p


@dataclass
class ObjectSpec:
    shape: dict
    pose: Pose
    symmetry: Optional[list] = None
    phantom: bool = False
    spacing: float = 0.004
    present: bool = True


@dataclass
class HandSpec:
    radius: float = 0.012
    spacing: float = 0.003
    rest: tuple = (0.30, 0.05, 0.60)
    gap: float = 0.0005
    approach_step: float = 0.0075
    retreat_step: float = 0.015
    lead: int = 10
    transit_height: float = 0.45


@dataclass
class ScenarioSpec:
    objects: dict
    events: list
    n_frames: int
    frame_rate: float = 30.0
    noise: float = 0.0005
    seed: int = 0
    hand: HandSpec = field(default_factory=HandSpec)
    rules: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    d_make: float = 0.005
    d_break: float = 0.010

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioSpec:
        if d.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
            raise InvalidScript(f"not a scenario (format={d.get('format')!r})")
        if d.get("version", SCENARIO_VERSION) != SCENARIO_VERSION:
            raise InvalidScript(f"scenario version {d.get('version')!r}, supported {SCENARIO_VERSION}")
        try:
            objects = {}
            for name, o in d["objects"].items():
                objects[name] = ObjectSpec(o["shape"], _pose(o.get("pose", {})), o.get("symmetry"),
                                           bool(o.get("phantom", False)), float(o.get("spacing", 0.004)),
                                           bool(o.get("present", True)))
            hand = HandSpec(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in d.get("hand", {}).items()})
            spec = cls(objects, [dict(e) for e in d["events"]], int(d["n_frames"]), float(d.get("frame_rate", 30.0)),
                       float(d.get("noise", 0.0005)), int(d.get("seed", 0)), hand, list(d.get("rules", [])),
                       list(d.get("steps", [])), float(d.get("d_make", 0.005)), float(d.get("d_break", 0.010)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidScript(f"malformed scenario: {exc}") from exc
        spec.validate()
        return spec

    def to_dict(self) -> dict:
        return {
            "format": SCENARIO_FORMAT, "version": SCENARIO_VERSION,
            "n_frames": self.n_frames, "frame_rate": self.frame_rate, "noise": self.noise, "seed": self.seed,
            "d_make": self.d_make, "d_break": self.d_break,
            "objects": {n: {"shape": o.shape, "pose": o.pose.to_dict(), "symmetry": o.symmetry,
                            "phantom": o.phantom, "spacing": o.spacing, "present": o.present}
                        for n, o in self.objects.items()},
            "hand": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.hand.__dict__.items()},
            "events": copy.deepcopy(self.events), "rules": copy.deepcopy(self.rules),
            "steps": copy.deepcopy(self.steps),
        }

    def validate(self):
        if self.noise < 0:
            raise InvalidScript("noise sigma must be >= 0")
        if self.n_frames < 1 or self.frame_rate <= 0:
            raise InvalidScript("need n_frames >= 1 and frame_rate > 0")
        last = -1
        holding = None
        for ev in self.events:
            kind = ev.get("type")
            obj = ev.get("object")
            if obj not in self.objects:
                raise InvalidScript(f"event {ev} names unknown object {obj!r}")
            start = ev.get("start", ev.get("frame"))
            if start is None or not 0 <= start < self.n_frames:
                raise InvalidScript(f"event {ev} lies outside the {self.n_frames} frames")
            if start < last:
                raise InvalidScript(f"events are not time-ordered at {ev}")
            last = start
            if kind == "move":
                if not ev["start"] < ev["end"] < self.n_frames:
                    raise InvalidScript(f"move needs start < end < n_frames: {ev}")
            elif kind == "touch":
                if holding is not None:
                    raise InvalidScript(f"hand touches {obj!r} while still holding {holding!r}")
                holding = obj
            elif kind == "release":
                if holding != obj:
                    raise InvalidScript(f"release of {obj!r} without a matching touch")
                holding = None
            elif kind not in ("appear", "disappear"):
                raise InvalidScript(f"unknown event type {kind!r}")
        if holding is not None:
            raise InvalidScript(f"touch of {holding!r} is never released")
        touches = [e for e in self.events if e["type"] in ("touch", "release")]
        for a, b in zip(touches, touches[1:]):
            if b["frame"] <= a["frame"]:
                raise InvalidScript("hand events overlap")
            if b["type"] == "touch" and b["frame"] - self.hand.lead <= a["frame"]:
                raise InvalidScript(f"touch at frame {b['frame']} leaves no room to approach after frame {a['frame']}")
        for r in self.rules:
            if r.get("type") != "faucet":
                raise InvalidScript(f"unknown rule {r.get('type')!r}")
            for key in ("lever", "base", "water"):
                if r.get(key) not in self.objects:
                    raise InvalidScript(f"faucet rule names unknown object {r.get(key)!r}")


def _smooth(s: float) -> float:
    s = min(max(s, 0.0), 1.0)
    return s * s * (3.0 - 2.0 * s)


def _move_target(ev: dict, start: Pose) -> Pose:
    if "to" in ev:
        return _pose(ev["to"])
    by = ev.get("by", {})
    rot = Pose.from_axis_angle(by["axis"], math.radians(by["angle_deg"])) if "axis" in by else Pose.identity()
    shifted = start @ rot
    return Pose(shifted.rotation, shifted.translation + np.asarray(by.get("translation", [0, 0, 0]), float))


def object_poses(spec: ScenarioSpec) -> tuple[dict, dict]:
    """Noise-free per-frame poses and presence flags for every object."""
    n = spec.n_frames
    poses = {name: [None] * n for name in spec.objects}
    present = {name: [o.present] * n for name, o in spec.objects.items()}
    current = {name: o.pose for name, o in spec.objects.items()}
    moves = [e for e in spec.events if e["type"] == "move"]
    active = {}
    flips = {}
    for e in spec.events:
        if e["type"] in ("appear", "disappear"):
            flips.setdefault(e["frame"], []).append((e["object"], e["type"] == "appear"))
    state = {name: o.present for name, o in spec.objects.items()}
    for f in range(n):
        for ev in moves:
            if ev["start"] == f:
                active[id(ev)] = (ev, current[ev["object"]], _move_target(ev, current[ev["object"]]))
        for key, (ev, a, b) in list(active.items()):
            s = _smooth((f - ev["start"]) / (ev["end"] - ev["start"]))
            current[ev["object"]] = interpolate_pose(a, b, s)
            if f >= ev["end"]:
                current[ev["object"]] = b
                del active[key]
        for name, on in flips.get(f, []):
            state[name] = on
        for name in spec.objects:
            poses[name][f] = current[name]
            present[name][f] = state[name]
    for rule in spec.rules:
        lever, base, water = rule["lever"], rule["base"], rule["water"]
        rest = poses[base][0].inverse() @ poses[lever][0]
        offset = _pose(rule["water_offset"])
        on = math.radians(rule.get("on_angle_deg", 30.0))
        for f in range(n):
            rel = poses[base][f].inverse() @ poses[lever][f]
            angle = rotation_angle(rest.rotation_matrix.T @ rel.rotation_matrix)
            present[water][f] = angle > on
            poses[water][f] = poses[base][f] @ offset
    return poses, present


def _hand_track(spec: ScenarioSpec, poses: dict) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame hand center and the unit direction the hand faces."""
    h = spec.hand
    n = spec.n_frames
    center = np.full((n, 3), np.nan)
    facing = np.tile([0.0, 0.0, -1.0], (n, 1))
    rest = np.asarray(h.rest, float)
    stand = h.radius + h.gap
    keys = [(0, rest)]
    touches = [e for e in spec.events if e["type"] in ("touch", "release")]
    for touch, release in zip(touches[::2], touches[1::2]):
        obj, s, e = touch["object"], touch["frame"], release["frame"]
        loc = np.asarray(touch["location"], float)
        a_world = np.asarray(touch.get("approach", [0, 0, -1.0]), float)
        a_world /= np.linalg.norm(a_world)
        a_model = poses[obj][s].rotation_matrix.T @ a_world
        contact_s = poses[obj][s].apply(loc)
        for k in range(h.lead, 0, -1):
            f = s - k
            if f >= 0:
                center[f] = contact_s - a_world * (stand + k * h.approach_step)
                facing[f] = a_world
        for f in range(s, e + 1):
            P = poses[obj][f]
            a = P.rotation_matrix @ a_model
            center[f] = P.apply(loc) - a * stand
            facing[f] = a
        a_end = facing[e]
        for k in range(1, h.lead + 1):
            f = e + k
            if f < n:
                center[f] = center[e] - a_end * (k * h.retreat_step)
                facing[f] = a_end
        keys.append((s - h.lead, center[max(s - h.lead, 0)]))
        keys.append((min(e + h.lead, n - 1), center[min(e + h.lead, n - 1)]))
    keys.append((n - 1, rest if np.isnan(center[n - 1]).any() else center[n - 1]))
    # transit between scripted segments: rise to transit height, cross over, descend
    for (f0, p0), (f1, p1) in zip(keys[:-1], keys[1:]):
        span = f1 - f0
        if span <= 1:
            continue
        top = max(h.transit_height, p0[2], p1[2])
        via0 = np.array([p0[0], p0[1], top])
        via1 = np.array([p1[0], p1[1], top])
        legs = [p0, via0, via1, p1]
        lengths = np.array([np.linalg.norm(b - a) for a, b in zip(legs[:-1], legs[1:])])
        total = lengths.sum()
        for f in range(f0 + 1, f1):
            if not np.isnan(center[f]).any():
                continue
            d = total * (f - f0) / span
            i = 0
            while i < 2 and d > lengths[i]:
                d -= lengths[i]
                i += 1
            t = 0.0 if lengths[i] == 0 else d / lengths[i]
            center[f] = legs[i] + t * (legs[i + 1] - legs[i])
    center[np.isnan(center).any(axis=1)] = rest
    return center, facing


def _facing_rotation(a: np.ndarray) -> np.ndarray:
    """Rotation taking -z onto ``a`` (so the sampled south pole faces the object)."""
    z = -a / np.linalg.norm(a)
    helper = np.array([1.0, 0, 0]) if abs(z[0]) < 0.9 else np.array([0, 1.0, 0])
    x = np.cross(helper, z)
    x /= np.linalg.norm(x)
    return np.column_stack([x, np.cross(z, x), z])


def generate_demo(spec: ScenarioSpec) -> tuple[Demonstration, dict]:
    """Render the scenario into per-frame noisy clouds plus an exact ground-truth sidecar."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    names = list(spec.objects)
    # observation samples and model samples are drawn independently
    obs_pts = {n: sample_surface(o.shape, o.spacing, rng) for n, o in spec.objects.items()}
    model_parts = {n: sample_parts(o.shape, o.spacing, rng) for n, o in spec.objects.items()}
    hand_pts = sample_surface({"type": "sphere", "radius": spec.hand.radius}, spec.hand.spacing, rng)
    poses, present = object_poses(spec)
    center, facing = _hand_track(spec, poses)

    frames = []
    clean = []
    for f in range(spec.n_frames):
        clouds, clean_clouds = {}, {}
        for n in names:
            if not present[n][f]:
                continue
            p = poses[n][f].apply(obs_pts[n])
            clean_clouds[n] = p
            noisy = p + rng.normal(0.0, spec.noise, p.shape) if spec.noise > 0 else p
            clouds[n] = PointCloud(noisy, n)
        hp = hand_pts @ _facing_rotation(facing[f]).T + center[f]
        clean_clouds["hand"] = hp
        hn = hp + rng.normal(0.0, spec.noise, hp.shape) if spec.noise > 0 else hp
        frames.append(Frame(f, clouds, PointCloud(hn, "hand")))
        clean.append(clean_clouds)

    models = {n: PointCloud(np.vstack(model_parts[n]), n) for n in names}
    parts = {n: [PointCloud(p, n) for p in model_parts[n]] for n in names if len(parts_of(spec.objects[n].shape)) > 1}
    meta = DemoMeta(spec.frame_rate, names,
                    {n: o.symmetry for n, o in spec.objects.items() if o.symmetry is not None},
                    list(spec.steps), phantom=[n for n, o in spec.objects.items() if o.phantom])
    demo = Demonstration(meta, frames, models, parts)
    return demo, _truth(spec, poses, present, clean)


def _truth(spec, poses, present, clean) -> dict:
    hp = HysteresisParams(spec.d_make, spec.d_break)
    touches = [e for e in spec.events if e["type"] in ("touch", "release")]
    hand = [{"object": t["object"], "start": t["frame"], "end": r["frame"]} for t, r in zip(touches[::2], touches[1::2])]
    prims = []
    for h in hand:
        s, e = h["start"], h["end"]
        prims.append({"kind": "MakeContact", "target": h["object"], "span": [s, s]})
        prims.append({"kind": "MaintainContact", "target": h["object"],
                      "span": [s + 1, e - 1] if e - s >= 2 else [s, e]})
        prims.append({"kind": "BreakContact", "target": h["object"], "span": [e, e]})
    contacts = []
    for a, b in object_pairs(list(spec.objects)):
        d = [min_distance(c[a], c[b]) if a in c and b in c else None for c in clean]
        states = bidirectional_contacts(d, hp)
        contacts.append({"pair": [a, b], "states": [int(s) for s in states]})
    return {
        "format": "contactlfd-truth", "version": 1,
        "frame_rate": spec.frame_rate,
        "poses": {n: [p.to_dict() for p in poses[n]] for n in spec.objects},
        "present": {n: [int(v) for v in present[n]] for n in spec.objects},
        "hand_contacts": hand,
        "primitives": prims,
        "object_contacts": contacts,
    }
