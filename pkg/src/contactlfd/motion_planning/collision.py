"""Collision scenes and the configuration-space collision test."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ..geometry import CollisionModel, Pose
from ..geometry.convex import _gjk, _penetration_depth
from .kinematics import KinematicChain, fk_matrices


@dataclass(frozen=True, eq=False)
class Attachment:
    """Object rigidly held by the tool; ``grasp`` maps object coordinates into the tool frame."""

    name: str
    model: CollisionModel
    grasp: Pose


class _Part:
    __slots__ = ("v", "n", "c", "r", "owner")

    def __init__(self, v, n, c, r, owner):
        self.v, self.n, self.c, self.r, self.owner = v, n, c, r, owner


def _posed_parts(model: CollisionModel, R: np.ndarray, t: np.ndarray, owner) -> list:
    out = []
    for part in model.parts:
        out.append(_Part(part.vertices @ R.T + t, part.face_normals @ R.T, R @ part.center + t, part.radius, owner))
    return out


@dataclass(frozen=True, eq=False)
class Scene:
    """Static obstacles (name → (CollisionModel, Pose)) plus an optional attached object.

    Links keep ``margin`` clearance from everything. The attached object may
    sink up to ``penetration_tol`` into static geometry, since it is expected
    to rest on or touch it. The last ``attach_exempt_links`` links (the hand)
    are not tested against the attached object.
    """

    static: dict = field(default_factory=dict)
    attached: Optional[Attachment] = None
    margin: float = 0.002
    penetration_tol: float = 0.005
    attach_exempt_links: int = 2

    @cached_property
    def _static_parts(self) -> list:
        out = []
        for name in sorted(self.static):
            model, pose = self.static[name]
            out.extend(_posed_parts(model, pose.rotation_matrix, pose.translation, name))
        return out

    def with_attached(self, attached: Optional[Attachment]) -> Scene:
        return Scene(self.static, attached, self.margin, self.penetration_tol, self.attach_exempt_links)

    def without(self, *names) -> Scene:
        return Scene({k: v for k, v in self.static.items() if k not in names}, self.attached, self.margin,
                     self.penetration_tol, self.attach_exempt_links)


def _close(a: _Part, b: _Part, margin: float) -> bool:
    d = a.c - b.c
    reach = a.r + b.r + margin
    if d @ d > reach * reach:
        return False
    dist, hit = _gjk(a.v, b.v, margin)
    return hit or dist <= margin


def _penetrates(a: _Part, b: _Part, tol: float) -> bool:
    d = a.c - b.c
    reach = a.r + b.r
    if d @ d > reach * reach:
        return False
    _, hit = _gjk(a.v, b.v, 0.0)
    if not hit:
        return False
    return _penetration_depth(a.v, a.n, b.v, b.n) > tol


def _link_parts(chain: KinematicChain, Ts: np.ndarray) -> list:
    out = []
    for i, model in enumerate(chain.link_collision):
        if model is not None:
            out.append(_posed_parts(model, Ts[i][:3, :3], Ts[i][:3, 3], i))
        else:
            out.append([])
    return out


def self_collision_pairs(chain: KinematicChain, q, margin: float = 0.0) -> set:
    """Non-adjacent link pairs that touch at ``q`` (ignore list not applied)."""
    Ts = fk_matrices(chain, q)
    links = _link_parts(chain, Ts)
    hits = set()
    for i in range(len(links)):
        for j in range(i + 2, len(links)):
            if any(_close(a, b, margin) for a in links[i] for b in links[j]):
                hits.add((i, j))
    return hits


def in_collision(chain: KinematicChain, q, scene: Scene) -> bool:
    """True iff links, or the attached object, hit the scene or a non-adjacent link."""
    Ts = fk_matrices(chain, q)
    links = _link_parts(chain, Ts)
    statics = scene._static_parts
    m = scene.margin
    for parts in links:
        for a in parts:
            for b in statics:
                if _close(a, b, m):
                    return True
    n = len(links)
    for i in range(n):
        for j in range(i + 2, n):
            if (i, j) in chain.ignore_pairs:
                continue
            for a in links[i]:
                for b in links[j]:
                    if _close(a, b, m):
                        return True
    if scene.attached is not None:
        T = Ts[-1] @ scene.attached.grasp.as_matrix()
        held = _posed_parts(scene.attached.model, T[:3, :3], T[:3, 3], scene.attached.name)
        for a in held:
            for b in statics:
                if _penetrates(a, b, scene.penetration_tol):
                    return True
            for parts in links[: n - scene.attach_exempt_links]:
                for b in parts:
                    if _close(a, b, m):
                        return True
    return False
