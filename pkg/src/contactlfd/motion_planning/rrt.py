"""RRT-Connect in joint space with greedy shortcut smoothing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GoalInCollision, StartInCollision, Timeout
from .collision import Scene, in_collision
from .kinematics import KinematicChain


@dataclass(frozen=True)
class RrtParams:
    step: float = 0.1
    max_iters: int = 5000
    rng_seed: int = 0
    goal_bias: float = 0.1

    def __post_init__(self):
        if self.step <= 0 or self.max_iters < 1 or not 0 <= self.goal_bias <= 1:
            raise ValueError("invalid RRT parameters")


@dataclass(frozen=True, eq=False)
class JointPath:
    waypoints: np.ndarray

    def __post_init__(self):
        w = np.array(self.waypoints, dtype=float)
        if w.ndim != 2 or len(w) < 2:
            raise ValueError("a joint path needs >= 2 waypoints")
        w.flags.writeable = False
        object.__setattr__(self, "waypoints", w)

    def __len__(self):
        return len(self.waypoints)


def interpolate_segment(a: np.ndarray, b: np.ndarray, res: float) -> np.ndarray:
    """Points a + (b - a) k / n for k = 1..n, with n = ceil(max|b - a| / res)."""
    d = b - a
    n = max(1, int(math.ceil(float(np.max(np.abs(d))) / res))) if len(d) else 1
    k = np.arange(1, n + 1)[:, None] / n
    return a + k * d


def interpolate_path(path, res: float) -> np.ndarray:
    """Dense samples of a piecewise-linear path, both endpoints included."""
    w = path.waypoints if isinstance(path, JointPath) else np.asarray(path, dtype=float)
    out = [w[:1]]
    for a, b in zip(w[:-1], w[1:]):
        out.append(interpolate_segment(a, b, res))
    return np.vstack(out)


def segment_free(chain: KinematicChain, scene: Scene, a, b, res: float) -> bool:
    """Collision test of the interior and end of segment a-b (``a`` assumed checked)."""
    for q in interpolate_segment(np.asarray(a, float), np.asarray(b, float), res):
        if in_collision(chain, q, scene):
            return False
    return True


def path_free(chain: KinematicChain, scene: Scene, path, res: float) -> bool:
    return not any(in_collision(chain, q, scene) for q in interpolate_path(path, res))


class _Tree:
    def __init__(self, root: np.ndarray, cap: int = 1024):
        self.nodes = np.empty((cap, len(root)))
        self.parent = np.empty(cap, dtype=int)
        self.n = 0
        self.add(root, -1)

    def add(self, q, parent) -> int:
        if self.n == len(self.nodes):
            self.nodes = np.vstack([self.nodes, np.empty_like(self.nodes)])
            self.parent = np.concatenate([self.parent, np.empty_like(self.parent)])
        self.nodes[self.n] = q
        self.parent[self.n] = parent
        self.n += 1
        return self.n - 1

    def nearest(self, q) -> int:
        d = self.nodes[: self.n] - q
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    def branch(self, i) -> list:
        out = []
        while i >= 0:
            out.append(self.nodes[i].copy())
            i = self.parent[i]
        return out


def shortcut(chain: KinematicChain, scene: Scene, waypoints: list, res: float) -> list:
    """Greedy waypoint skipping: from each kept waypoint jump to the farthest visible one."""
    out = [waypoints[0]]
    i = 0
    n = len(waypoints)
    while i < n - 1:
        j = n - 1
        while j > i + 1 and not segment_free(chain, scene, waypoints[i], waypoints[j], res):
            j -= 1
        out.append(waypoints[j])
        i = j
    return out


def plan_rrt_connect(chain: KinematicChain, scene: Scene, q_start, q_goal, params: RrtParams = RrtParams()) -> JointPath:
    """Bidirectional RRT with the connect heuristic.

    Edges are validated at ``step / 2`` with :func:`interpolate_segment`, the
    same sampling :func:`path_free` uses, so returned paths re-validate exactly.
    """
    qs = chain.check(q_start).copy()
    qg = chain.check(q_goal).copy()
    res = params.step / 2.0
    if not chain.within_limits(qs) or in_collision(chain, qs, scene):
        raise StartInCollision("start configuration is in collision or outside limits")
    if not chain.within_limits(qg) or in_collision(chain, qg, scene):
        raise GoalInCollision("goal configuration is in collision or outside limits")
    if segment_free(chain, scene, qs, qg, res):
        return JointPath(np.vstack([qs, qg]))

    rng = np.random.default_rng(params.rng_seed)
    ta, tb = _Tree(qs), _Tree(qg)
    a_is_start = True
    step = params.step

    def extend(tree: _Tree, target) -> tuple[str, int]:
        i = tree.nearest(target)
        q = tree.nodes[i]
        d = target - q
        dist = float(np.linalg.norm(d))
        reached = dist <= step
        q_new = target.copy() if reached else q + d * (step / dist)
        if not segment_free(chain, scene, q, q_new, res):
            return "trapped", i
        j = tree.add(q_new, i)
        return ("reached" if reached else "advanced"), j

    for _ in range(params.max_iters):
        if rng.random() < params.goal_bias:
            q_rand = tb.nodes[0].copy()
        else:
            q_rand = rng.uniform(chain.lower, chain.upper)
        status, ia = extend(ta, q_rand)
        if status != "trapped":
            q_new = ta.nodes[ia].copy()
            while True:
                status_b, ib = extend(tb, q_new)
                if status_b != "advanced":
                    break
            if status_b == "reached":
                pa, pb = ta.branch(ia)[::-1], tb.branch(ib)
                path = pa + pb[1:]
                if not a_is_start:
                    path = path[::-1]
                path[0], path[-1] = qs, qg
                return JointPath(np.vstack(shortcut(chain, scene, path, res)))
        ta, tb = tb, ta
        a_is_start = not a_is_start
    raise Timeout(f"RRT-Connect exceeded {params.max_iters} iterations")
