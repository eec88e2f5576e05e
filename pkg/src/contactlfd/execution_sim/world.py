"""Immutable kinematic world: object poses, robot configuration, attachment and clock."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from ..errors import FormatError
from ..geometry import CollisionModel, ConvexShape, PointCloud, Pose
from ..geometry.transforms import rotation_angle
from ..motion_planning import Attachment, KinematicChain, Scene, fk_matrices
from ..shapes import sample_parts, shape_vertices


@dataclass(frozen=True, eq=False)
class SimObject:
    name: str
    cloud: PointCloud
    collision: CollisionModel
    symmetry_axis: Optional[np.ndarray] = None
    phantom: bool = False
    fixture: bool = False
    shape: Optional[dict] = None


@dataclass(frozen=True, eq=False)
class WorldState:
    """Scene-frame object poses plus robot state.

    Invariant: an attached object's pose equals tool pose ∘ ``attachment.grasp``.
    """

    objects: Mapping[str, SimObject]
    poses: Mapping[str, Pose]
    present: Mapping[str, bool]
    q: np.ndarray
    attachment: Optional[Attachment] = None
    clock: float = 0.0
    rules: tuple = ()
    rule_rest: Mapping[int, Pose] = field(default_factory=dict)

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        q.flags.writeable = False
        object.__setattr__(self, "q", q)
        for name in ("objects", "poses", "present", "rule_rest"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))

    def has(self, name: str) -> bool:
        return name in self.poses

    def visible(self, name: str) -> bool:
        return bool(self.present.get(name, False))

    def tool_pose(self, chain: KinematicChain) -> Pose:
        return Pose.from_matrix(fk_matrices(chain, self.q)[-1])

    def with_q(self, q, chain: KinematicChain, clock: Optional[float] = None) -> WorldState:
        """Move the robot; the held object follows rigidly and scripted rules re-run."""
        q = np.asarray(q, dtype=float)
        poses = dict(self.poses)
        if self.attachment is not None:
            T = Pose.from_matrix(fk_matrices(chain, q)[-1])
            poses[self.attachment.name] = T @ self.attachment.grasp
        w = replace(self, q=q, poses=poses, clock=self.clock if clock is None else clock)
        return w.apply_rules()

    def attach(self, name: str, grasp: Pose) -> WorldState:
        return replace(self, attachment=Attachment(name, self.objects[name].collision, grasp))

    def release(self) -> WorldState:
        return replace(self, attachment=None)

    def with_poses(self, updates: dict) -> WorldState:
        poses = dict(self.poses)
        poses.update(updates)
        return replace(self, poses=poses).apply_rules()

    def apply_rules(self) -> WorldState:
        if not self.rules:
            return self
        poses, present = dict(self.poses), dict(self.present)
        for i, r in enumerate(self.rules):
            lever, base, water = r["lever"], r["base"], r["water"]
            if lever not in poses or base not in poses or water not in poses:
                continue
            rel = poses[base].inverse() @ poses[lever]
            angle = rotation_angle(self.rule_rest[i].rotation_matrix.T @ rel.rotation_matrix)
            present[water] = angle > math.radians(r.get("on_angle_deg", 30.0))
            poses[water] = poses[base] @ _pose(r["water_offset"])
        return replace(self, poses=poses, present=present, rules=self.rules, rule_rest=self.rule_rest)

    def collision_scene(self, margin: float = 0.002, penetration_tol: float = 0.005) -> Scene:
        """Present, solid objects as obstacles; the held object rides on the tool."""
        held = self.attachment.name if self.attachment is not None else None
        static = {n: (o.collision, self.poses[n]) for n, o in self.objects.items()
                  if n != held and not o.phantom and self.visible(n)}
        return Scene(static, self.attachment, margin, penetration_tol)

    def same_as(self, other: WorldState) -> bool:
        """Exact equality of every mutable quantity."""
        if set(self.poses) != set(other.poses) or dict(self.present) != dict(other.present):
            return False
        for n, p in self.poses.items():
            o = other.poses[n]
            if not (np.array_equal(p.rotation, o.rotation) and np.array_equal(p.translation, o.translation)):
                return False
        a, b = self.attachment, other.attachment
        if (a is None) != (b is None):
            return False
        if a is not None and (a.name != b.name or not np.array_equal(a.grasp.as_matrix(), b.grasp.as_matrix())):
            return False
        return np.array_equal(self.q, other.q) and self.clock == other.clock


def _pose(d) -> Pose:
    if isinstance(d, Pose):
        return d
    if "quaternion" in d:
        return Pose.from_dict(d)
    return Pose.from_translation(d.get("translation", [0.0, 0.0, 0.0]))


def build_world(scene: dict, chain: KinematicChain, policy=None) -> WorldState:
    """World from a scene description.

    Each object gives a ``pose`` and either a ``shape`` (sampled into a model
    cloud and turned into exact convex parts) or nothing, in which case the
    policy's learned model of the same name is used.
    """
    rng = np.random.default_rng(scene.get("seed", 0))
    spacing = float(scene.get("sample_spacing", 0.004))
    objects, poses, present = {}, {}, {}
    for name in sorted(scene["objects"]):
        spec = scene["objects"][name]
        learned = policy.object_models.get(name) if policy is not None else None
        try:
            if "shape" in spec:
                shape = spec["shape"]
                cloud = PointCloud(np.vstack(sample_parts(shape, spacing, rng)), name)
                collision = CollisionModel(tuple(ConvexShape(v) for v in shape_vertices(shape)))
            elif learned is not None:
                shape = None
                cloud, collision = learned.cloud, learned.collision
            else:
                raise FormatError(f"scene object {name!r} has no shape and no learned model")
            sym = spec.get("symmetry")
            if sym is None and learned is not None and learned.symmetry_axis is not None:
                sym = learned.symmetry_axis
            phantom = bool(spec.get("phantom", learned.phantom if learned is not None else False))
            objects[name] = SimObject(name, cloud, collision, None if sym is None else np.asarray(sym, float),
                                      phantom, bool(spec.get("fixture", False)), shape)
            poses[name] = _pose(spec.get("pose", {}))
            present[name] = bool(spec.get("present", True))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"scene object {name!r}: {exc}") from exc
    rules = tuple(scene.get("rules", ()))
    rest = {}
    for i, r in enumerate(rules):
        if r["lever"] in poses and r["base"] in poses:
            rest[i] = poses[r["base"]].inverse() @ poses[r["lever"]]
    robot = scene.get("robot", {})
    q = np.asarray(robot.get("q", chain.ready), dtype=float)
    w = WorldState(objects, poses, present, chain.check(q), None, 0.0, rules, rest)
    return w.apply_rules()
