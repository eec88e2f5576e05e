"""Regenerate src/contactlfd/motion_planning/robots/franka_like.json.

Kinematics follow the published modified-DH table of a Franka-class 7-joint
arm. Link geometry is a coarse set of octagonal prisms and one hand box.
Self-collision pairs that overlap in more than half of random configurations
(structural overlaps of the coarse hulls) are written to ``ignore_pairs``.
"""
from pathlib import Path

import numpy as np

from contactlfd.geometry import CollisionModel, ConvexShape, Pose
from contactlfd.motion_planning.collision import Scene, in_collision
from contactlfd.motion_planning.kinematics import Joint, KinematicChain

A = [0.0, 0.0, 0.0, 0.0825, -0.0825, 0.0, 0.088]
D = [0.333, 0.0, 0.316, 0.0, 0.384, 0.0, 0.0]
ALPHA = [0.0, -np.pi / 2, np.pi / 2, np.pi / 2, -np.pi / 2, np.pi / 2, np.pi / 2]
LIMITS = [(-2.8973, 2.8973), (-1.7628, 1.7628), (-2.8973, 2.8973), (-3.0718, -0.0698),
          (-2.8973, 2.8973), (-0.0175, 3.7525), (-2.8973, 2.8973)]
VEL = [2.175, 2.175, 2.175, 2.175, 2.61, 2.61, 2.61]
ACC = [15.0, 7.5, 10.0, 12.5, 15.0, 20.0, 20.0]
READY = [0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785]


def prism(p0, p1, r, n=8):
    """Octagonal prism of radius r around segment p0-p1."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    if np.linalg.norm(d) < 1e-9:
        d = np.array([0.0, 0.0, 1.0])
    d = d / np.linalg.norm(d)
    u = np.cross(d, [1.0, 0, 0] if abs(d[0]) < 0.9 else [0, 1.0, 0])
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    ang = np.arange(n) * 2 * np.pi / n
    ring = np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v
    return np.vstack([p0 + r * ring, p1 + r * ring])


def box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])


def links():
    z = np.array([0, 0, 1.0])
    return [
        [prism([0, 0, 0], [0, 0, 0.14], 0.09)],
        [prism([0, 0, -0.19], [0, 0, 0.06], 0.07)],
        [prism([0, 0, 0], [0, -0.20, 0], 0.06)],
        [np.vstack([prism([0, 0, -0.12], [0, 0, 0.03], 0.06), prism([0.0825, 0, -0.05], [0.0825, 0, 0.05], 0.05)])],
        [np.vstack([prism(-0.05 * z, 0.05 * z, 0.06), prism([-0.0825, 0.06, 0], [-0.0825, 0.14, 0], 0.055)])],
        [prism([0, 0, -0.26], [0, 0, -0.02], 0.055)],
        [np.vstack([prism(-0.05 * z, 0.05 * z, 0.055), prism([0.088, 0, -0.03], [0.088, 0, 0.03], 0.045)])],
        [prism([0, 0, -0.03], [0, 0, 0.107], 0.045), box([-0.03, -0.10, 0.107], [0.03, 0.10, 0.16])],
    ]


def build(ignore=frozenset()):
    joints = []
    for i in range(7):
        rot = Pose.from_axis_angle([1, 0, 0], ALPHA[i])
        t = rot.rotation_matrix @ np.array([A[i], 0.0, D[i]])
        joints.append(Joint(np.array([0, 0, 1.0]), Pose(rot.rotation, t), LIMITS[i], VEL[i], ACC[i],
                            name=f"joint{i + 1}"))
    models = tuple(CollisionModel(tuple(ConvexShape(p) for p in parts)) for parts in links())
    return KinematicChain(tuple(joints), Pose.from_translation([0, 0, 0.207]), models,
                          ignore_pairs=ignore, ready=np.array(READY), name="franka_like")


def structural_pairs(chain, n=400, seed=0):
    """Non-adjacent pairs overlapping in most random configurations."""
    rng = np.random.default_rng(seed)
    from contactlfd.motion_planning.collision import self_collision_pairs
    counts = {}
    for _ in range(n):
        q = rng.uniform(chain.lower, chain.upper)
        for pair in self_collision_pairs(chain, q):
            counts[pair] = counts.get(pair, 0) + 1
    return frozenset(p for p, c in counts.items() if c > n / 2)


def main():
    chain = build()
    ignore = structural_pairs(chain)
    chain = build(ignore)
    assert not in_collision(chain, chain.ready, Scene()), "ready pose self-collides"
    out = Path(__file__).resolve().parents[1] / "src/contactlfd/motion_planning/robots/franka_like.json"
    chain.save(out)
    print(f"wrote {out} (ignored pairs: {sorted(ignore)})")


if __name__ == "__main__":
    main()
