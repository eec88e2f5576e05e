"""Policy execution: timed object trajectories, alternative poses, IK, planning and timing."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..errors import MissingReference, NoSolution, PlanningFailure, PoseEstimationError
from ..geometry import Pose, model_separation, model_signed_separation
from ..motion_planning import (ContactConstraint, JointPath, JointTrajectory, KinematicChain, RrtParams, SymmetrySpec,
                               in_collision, inverse_kinematics, match_duration, plan_rrt_connect,
                               propose_alternative_poses, segment_free, time_parameterize)
from ..pose_estimation import IcpParams, icp_register
from ..primitive_learning import Policy, PrimitiveKind
from .world import WorldState

log = logging.getLogger(__name__)


class Outcome(str, Enum):
    SUCCESS = "Success"
    IK_FAILURE = "IkFailure"
    MOTION_PLANNING_FAILURE = "MotionPlanningFailure"
    POSE_ESTIMATION_FAILURE = "PoseEstimationFailure"
    MISSING_REFERENCE = "MissingReference"
    SKIPPED = "Skipped"


@dataclass(frozen=True)
class ExecParams:
    rrt: RrtParams = field(default_factory=lambda: RrtParams(step=0.1, max_iters=3000))
    seed: int = 0
    use_alternatives: bool = True
    continue_on_error: bool = False
    d_contact: float = 0.010
    d_break: float = 0.010
    max_penetration: float = 0.005
    ik_restarts: int = 8
    ik_solutions: int = 4
    lookahead: bool = True
    subsample_pos: float = 0.005
    subsample_rot: float = math.radians(3.0)
    estimate_poses: bool = False
    estimation_noise: float = 0.0005
    estimation_gate: float = 0.5
    margin: float = 0.002


@dataclass(frozen=True)
class TimedEntry:
    """One desired held-object pose; ``pose`` is relative to ``reference``."""

    timestamp: float
    object: str
    pose: Pose
    reference: str
    desired: Pose
    contact_set: frozenset = frozenset()
    apart_set: frozenset = frozenset()
    frame: int = -1
    key: bool = False


@dataclass(frozen=True)
class TimedObjectTrajectory:
    entries: tuple

    def __post_init__(self):
        ts = [e.timestamp for e in self.entries]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("timestamps must be non-decreasing")


@dataclass(frozen=True)
class KeyMomentRecord:
    primitive: int
    frame: int
    pos_error: float
    rot_error: float
    contacts_ok: bool


@dataclass
class PrimitiveResult:
    index: int
    kind: str
    target: str
    outcome: Outcome
    message: str = ""
    duration: float = 0.0
    candidate_index: Optional[int] = None
    location_index: Optional[int] = None
    non_first_candidates: int = 0
    failed_frame: Optional[int] = None
    key_moments: list = field(default_factory=list)
    segments: list = field(default_factory=list, repr=False)
    held: Optional[tuple] = field(default=None, repr=False)


@dataclass
class ExecutionResult:
    primitives: list
    total_duration: float
    joint_times: np.ndarray
    joint_configs: np.ndarray
    pose_log: list = field(default_factory=list, repr=False)
    steps: list = field(default_factory=list)

    @property
    def outcomes(self) -> list:
        return [p.outcome for p in self.primitives]

    @property
    def key_moments(self) -> list:
        return [k for p in self.primitives for k in p.key_moments]

    @property
    def success(self) -> bool:
        return all(p.outcome is Outcome.SUCCESS for p in self.primitives) and \
            all(k.contacts_ok for k in self.key_moments)


# -- trajectories ----------------------------------------------------------------

def _anchors(world: WorldState, names, target: str) -> dict:
    out = {}
    for n in names:
        if not world.has(n):
            raise MissingReference(f"reference object {n!r} is not in the scene")
        out[n] = world.poses[n]
    return out


def _involving(pairs, target) -> frozenset:
    return frozenset(p for p in pairs if target in p)


def instantiate_trajectory(policy: Policy, primitive_index: int, world: WorldState) -> TimedObjectTrajectory:
    """Re-anchor the learned poses of one primitive to the current scene."""
    prim = policy.primitives[primitive_index]
    t = prim.target
    if not world.has(t):
        raise MissingReference(f"target {t!r} is not in the scene")
    if prim.kind is PrimitiveKind.MAKE:
        return TimedObjectTrajectory((TimedEntry(0.0, t, Pose.identity(), t, world.poses[t], frame=prim.span[0]),))
    if prim.kind is PrimitiveKind.BREAK:
        p = prim.params
        ref = _anchors(world, [p.reference], t)[p.reference]
        rel = p.effective_pose()
        pair = tuple(sorted((t, p.reference)))
        return TimedObjectTrajectory((TimedEntry(0.0, t, rel, p.reference, ref @ rel, frozenset([pair]),
                                                 frame=prim.span[1], key=True),))
    p = prim.params
    names = set()
    for e in p.dense_track:
        names.add(e.reference)
        if e.blend_reference is not None and e.weight > 0:
            names.add(e.blend_reference)
    keys = {k.frame: k for k in p.key_moments}
    # an absent object is trivially apart, so only contact partners are required
    for k in p.key_moments:
        for pair in _involving(k.contact_set, t):
            names.update(pair)
    anchors = _anchors(world, sorted(names - {t}), t)
    # the held object's own anchor is its pose when the primitive starts
    anchors[t] = world.poses[t]
    entries = []
    for e in p.dense_track:
        k = keys.get(e.frame)
        entries.append(TimedEntry(e.timestamp, t, e.pose, e.reference, e.scene_pose(anchors),
                                  _involving(k.contact_set, t) if k else frozenset(),
                                  _involving(k.apart_set, t) if k else frozenset(), e.frame, k is not None))
    return TimedObjectTrajectory(tuple(entries))


# -- checks ----------------------------------------------------------------------

def verify_contacts(world: WorldState, required, params: ExecParams = ExecParams(), apart=()) -> bool:
    """Required pairs within the contact band; ``apart`` pairs farther than ``d_break``.

    Penetration up to ``max_penetration`` counts as contact (unbounded when
    either object is a phantom such as water).
    """
    for a, b in required:
        if not (world.visible(a) and world.visible(b)):
            return False
        oa, ob = world.objects[a], world.objects[b]
        s = model_signed_separation(oa.collision, world.poses[a], ob.collision, world.poses[b])
        limit = math.inf if (oa.phantom or ob.phantom) else params.max_penetration
        if not -limit <= s <= params.d_contact:
            return False
    for a, b in apart:
        if not (world.visible(a) and world.visible(b)):
            continue
        oa, ob = world.objects[a], world.objects[b]
        if model_separation(oa.collision, world.poses[a], ob.collision, world.poses[b]).separation <= params.d_break:
            return False
    return True


def pose_error(actual: Pose, desired: Pose, axis=None) -> tuple[float, float]:
    """Translation and rotation error; with a symmetry axis only the axis direction counts."""
    dp = float(np.linalg.norm(actual.translation - desired.translation))
    Ra, Rd = actual.rotation_matrix, desired.rotation_matrix
    if axis is not None:
        a = np.asarray(axis, float) / np.linalg.norm(axis)
        c = float(np.clip((Ra @ a) @ (Rd @ a), -1.0, 1.0))
        return dp, math.acos(c)
    from ..geometry.transforms import rotation_angle
    return dp, rotation_angle(Ra.T @ Rd)


# -- grasps ----------------------------------------------------------------------

def grasp_frame(point, approach, axis=None) -> Pose:
    """Tool frame in object coordinates: origin at ``point``, z along ``approach``.

    Tool y follows the radial direction away from the symmetry axis when
    there is one, otherwise the model x axis projected off z.
    """
    z = np.asarray(approach, float)
    z = z / np.linalg.norm(z)
    if axis is not None:
        a = np.asarray(axis, float) / np.linalg.norm(axis)
        y = np.asarray(point, float) - (np.asarray(point, float) @ a) * a
    else:
        y = np.array([1.0, 0.0, 0.0])
    y = y - (y @ z) * z
    if np.linalg.norm(y) < 1e-6:
        y = np.cross(z, [1.0, 0, 0] if abs(z[0]) < 0.9 else [0, 1.0, 0])
    y /= np.linalg.norm(y)
    x = np.cross(y, z)
    return Pose.from_rt(np.column_stack([x, y, z]), point)


def snap_location(point, cloud_points: np.ndarray) -> np.ndarray:
    """Nearest point of the execution model to a learned location (model frame)."""
    _, j = cKDTree(cloud_points).query(np.asarray(point, float))
    return cloud_points[j].copy()


# -- motion ----------------------------------------------------------------------

def _seed(params: ExecParams, *parts) -> int:
    h = params.seed * 1_000_003
    for p in parts:
        h = (h * 31 + int(p)) % (2 ** 31 - 1)
    return h


def _ik_solutions(chain, scene, target: Pose, seeds, rng_seed, limit):
    """Distinct collision-free IK solutions from each seed in turn, at most ``limit``."""
    out = []
    rng = np.random.default_rng(rng_seed)
    for seed in seeds:
        if seed is None:
            seed = rng.uniform(chain.lower, chain.upper)
        try:
            q = inverse_kinematics(chain, target, seed, max_restarts=0, rng_seed=int(rng.integers(2 ** 31)))
        except NoSolution:
            continue
        if in_collision(chain, q, scene) or any(np.max(np.abs(q - o)) < 1e-3 for o in out):
            continue
        out.append(q)
        if len(out) >= limit:
            break
    return out


def _solve(chain, scene, target: Pose, q_seed, params, rng_seed, restarts) -> np.ndarray:
    """IK near ``q_seed`` whose configuration is collision-free; NoSolution otherwise."""
    sols = _ik_solutions(chain, scene, target, [q_seed] + [None] * restarts, rng_seed, 1)
    if not sols:
        raise NoSolution("no collision-free IK solution")
    return sols[0]


def _connect(chain, scene, qa, qb, params: ExecParams, rng_seed) -> JointPath:
    res = params.rrt.step / 2.0
    if segment_free(chain, scene, qa, qb, res):
        return JointPath(np.vstack([qa, qb]))
    return plan_rrt_connect(chain, scene, qa, qb, replace(params.rrt, rng_seed=rng_seed))


def _timed(path: JointPath, chain, target_duration: float) -> JointTrajectory:
    traj = time_parameterize(path, chain)
    if traj.duration == 0.0:
        if target_duration <= 0:
            return traj
        q = path.waypoints[-1]
        return JointTrajectory(np.array([0.0, target_duration]), np.vstack([q, q]))
    return match_duration(traj, target_duration)


def _advance(world: WorldState, traj: JointTrajectory, chain) -> WorldState:
    return world.with_q(traj.configs[-1], chain, world.clock + traj.duration)


def _estimate(world: WorldState, policy: Policy, params: ExecParams, rng_seed: int) -> WorldState:
    """Replace non-held object poses by ICP estimates from noisy rendered observations."""
    rng = np.random.default_rng(rng_seed)
    held = world.attachment.name if world.attachment is not None else None
    icp = IcpParams(correspondence_max_dist=params.estimation_gate)
    updates = {}
    for name, obj in world.objects.items():
        if name == held or obj.fixture or obj.phantom or not world.visible(name):
            continue
        model = policy.object_models[name].cloud if name in policy.object_models else obj.cloud
        obs_pts = world.poses[name].apply(obj.cloud.points)
        obs_pts = obs_pts + rng.normal(0.0, params.estimation_noise, obs_pts.shape)
        init = policy.initial_poses.get(name, world.poses[name])
        from ..geometry import PointCloud
        est = icp_register(model, PointCloud(obs_pts, name), init, icp)
        # refine with a tight gate once roughly aligned
        est = icp_register(model, PointCloud(obs_pts, name), est.pose, IcpParams(correspondence_max_dist=0.01))
        updates[name] = est.pose
    return world.with_poses(updates)


def _is_symmetry(off: Pose, axis) -> bool:
    if axis is None:
        return np.allclose(off.as_matrix(), np.eye(4))
    a = np.asarray(axis, float)
    return bool(np.allclose(off.rotation_matrix @ a, a, atol=1e-9))


def _candidates(desired: Pose, obj, params: ExecParams, constraints=(), first_offset: Optional[Pose] = None,
                exact: bool = False):
    """(pose, offset) in proposal order, constraints checked lazily on non-desired candidates.

    ``first_offset`` (a symmetry rotation chosen earlier) is tried first so
    consecutive poses keep the same grasp side. With ``exact`` only poses
    indistinguishable from ``desired`` (symmetry rotations) are proposed.
    """
    if not params.use_alternatives:
        yield desired, Pose.identity()
        return
    sym = SymmetrySpec(obj.symmetry_axis)
    offsets = propose_alternative_poses(Pose.identity(), sym, (), with_offsets=True)
    if first_offset is not None:
        yield desired @ first_offset, first_offset
    for i, (_, off) in enumerate(offsets):
        if first_offset is not None and np.allclose(off.as_matrix(), first_offset.as_matrix()):
            continue
        if exact and not _is_symmetry(off, obj.symmetry_axis):
            continue
        pose = desired @ off
        if (i > 0 or first_offset is not None) and not all(c.satisfied(pose) for c in constraints):
            continue
        yield pose, off


def _constraints(world: WorldState, target: str, pairs, params: ExecParams) -> list:
    out = []
    obj = world.objects[target]
    for pair in pairs:
        other = pair[1] if pair[0] == target else pair[0]
        if not world.visible(other):
            continue
        o = world.objects[other]
        pen = math.inf if (o.phantom or obj.phantom) else params.max_penetration
        out.append(ContactConstraint(obj.collision, o.collision, world.poses[other], params.d_contact, pen))
    return out


def _key_record(world, index, entry: TimedEntry, obj, params) -> KeyMomentRecord:
    dp, dr = pose_error(world.poses[entry.object], entry.desired, obj.symmetry_axis)
    ok = verify_contacts(world, entry.contact_set, params, entry.apart_set)
    return KeyMomentRecord(index, entry.frame, dp, dr, ok)


def _fail(index, prim, outcome, msg, frame=None) -> PrimitiveResult:
    return PrimitiveResult(index, prim.kind.value, prim.target, outcome, msg, failed_frame=frame)


def _lookahead_ok(policy, index, world, chain, params) -> bool:
    """Dry run of the Maintain that follows a Make with the chosen grasp.

    Same candidate order as the real run, with seeded collision-free IK at
    every subsampled pose; segments between poses are not planned here.
    """
    nxt = index + 1
    if not params.lookahead or nxt >= len(policy.primitives):
        return True
    prim = policy.primitives[nxt]
    if prim.kind is not PrimitiveKind.MAINTAIN or prim.target != policy.primitives[index].target or prim.degenerate:
        return True
    t = prim.target
    obj = world.objects[t]
    try:
        entries = _subsample(list(instantiate_trajectory(policy, nxt, world).entries),
                             params.subsample_pos, params.subsample_rot)
    except MissingReference:
        # reported by the Maintain itself
        return True
    inv_grasp = world.attachment.grasp.inverse()
    prev_off = None
    for k, e in enumerate(entries):
        scene = world.collision_scene(params.margin)
        cons = _constraints(world, t, e.contact_set, params)
        for ci, (C, off) in enumerate(_candidates(e.desired, obj, params, cons, prev_off, e.key)):
            try:
                q = _solve(chain, scene, C @ inv_grasp, world.q, params, _seed(params, nxt, k, ci, 9), 0)
            except NoSolution:
                continue
            world = world.with_q(q, chain)
            if _is_symmetry(off, obj.symmetry_axis):
                prev_off = off
            break
        else:
            return False
    return True


def _make(policy, index, world, belief, chain, params) -> tuple[WorldState, PrimitiveResult]:
    prim = policy.primitives[index]
    t = prim.target
    obj = world.objects[t]
    P = belief.poses[t]
    start = world
    if world.attachment is not None and world.attachment.name != t:
        # left over from a failed primitive: let go where it is
        world = world.release()
    scene = world.collision_scene(params.margin)
    any_ik = False
    tried = 0
    for li, loc in enumerate(prim.params.effective_locations()):
        point = snap_location(loc.point, obj.cloud.points)
        G = grasp_frame(point, prim.params.approach, obj.symmetry_axis)
        for ci, (C, off) in enumerate(_candidates(P, obj, params)):
            tried += 1
            T = C @ G
            seeds = [world.q, chain.ready] + [None] * params.ik_restarts
            sols = _ik_solutions(chain, scene, T, seeds, _seed(params, index, li, ci), params.ik_solutions)
            any_ik = any_ik or bool(sols)
            for si, q in enumerate(sols):
                try:
                    path = _connect(chain, scene, world.q, q, params, _seed(params, index, li, ci, si, 1))
                except PlanningFailure:
                    continue
                traj = _timed(path, chain, 0.0)
                new = _advance(world, traj, chain)
                # hold the object where it actually is, seen from the tool
                new = new.attach(t, new.tool_pose(chain).inverse() @ world.poses[t])
                if not _lookahead_ok(policy, index, new, chain, params):
                    continue
                res = PrimitiveResult(index, prim.kind.value, t, Outcome.SUCCESS, duration=traj.duration,
                                      candidate_index=ci, location_index=li, non_first_candidates=int(ci > 0),
                                      segments=[traj])
                return new, res
    outcome = Outcome.MOTION_PLANNING_FAILURE if any_ik else Outcome.IK_FAILURE
    return start, _fail(index, prim, outcome, f"no feasible grasp among {tried} candidates", prim.span[0])


def _subsample(entries, pos_tol, rot_tol) -> list:
    keep = [entries[0]]
    for i, e in enumerate(entries[1:], 1):
        last = keep[-1]
        dp = float(np.linalg.norm(e.desired.translation - last.desired.translation))
        from ..geometry.transforms import rotation_angle
        dr = rotation_angle(last.desired.rotation_matrix.T @ e.desired.rotation_matrix)
        if e.key or i == len(entries) - 1 or dp > pos_tol or dr > rot_tol:
            keep.append(e)
    return keep


def _follow(policy, index, world, entries, chain, params, start_time=None):
    """Track held-object poses; returns (world, segments, key records, non-first count) or a failure tuple."""
    prim = policy.primitives[index]
    t = prim.target
    obj = world.objects[t]
    if world.attachment is None or world.attachment.name != t:
        return None, ("not holding " + repr(t), entries[0].frame)
    inv_grasp = world.attachment.grasp.inverse()
    segments, records = [], []
    prev_off = None
    prev_time = entries[0].timestamp if start_time is None else start_time
    non_first = 0
    for k, e in enumerate(entries):
        scene = world.collision_scene(params.margin)
        cons = _constraints(world, t, e.contact_set, params)
        done = False
        for ci, (C, off) in enumerate(_candidates(e.desired, obj, params, cons, prev_off, e.key)):
            tool = C @ inv_grasp
            try:
                q = _solve(chain, scene, tool, world.q, params, _seed(params, index, k, ci), 0 if ci == 0 else 2)
                path = _connect(chain, scene, world.q, q, params, _seed(params, index, k, ci, 1))
            except (NoSolution, PlanningFailure) as exc:
                log.debug("primitive %d frame %d candidate %d: %s", index, e.frame, ci, exc)
                continue
            traj = _timed(path, chain, max(e.timestamp - prev_time, 0.0))
            world = _advance(world, traj, chain)
            segments.append(traj)
            non_first += int(not np.allclose(off.as_matrix(), np.eye(4)))
            if _is_symmetry(off, obj.symmetry_axis):
                prev_off = off
            done = True
            break
        if not done:
            return None, (f"no feasible pose for {t!r} at frame {e.frame}", e.frame)
        prev_time = e.timestamp
        if e.key:
            records.append(_key_record(world, index, e, obj, params))
    return (world, segments, records, non_first), None


def _maintain(policy, index, world, belief, chain, params):
    prim = policy.primitives[index]
    if prim.degenerate:
        return world, PrimitiveResult(index, prim.kind.value, prim.target, Outcome.SUCCESS, "collapsed short touch")
    traj = instantiate_trajectory(policy, index, belief)
    entries = _subsample(list(traj.entries), params.subsample_pos, params.subsample_rot)
    ok, err = _follow(policy, index, world, entries, chain, params)
    if ok is None:
        return world, _fail(index, prim, Outcome.MOTION_PLANNING_FAILURE, err[0], err[1])
    new, segs, records, non_first = ok
    return new, PrimitiveResult(index, prim.kind.value, prim.target, Outcome.SUCCESS,
                                duration=sum(s.duration for s in segs), non_first_candidates=non_first,
                                key_moments=records, segments=segs, held=(prim.target, world.attachment.grasp))


def _break(policy, index, world, belief, chain, params):
    prim = policy.primitives[index]
    traj = instantiate_trajectory(policy, index, belief)
    dt = 1.0 / policy.frame_rate
    ok, err = _follow(policy, index, world, list(traj.entries), chain, params, start_time=-dt)
    if ok is None:
        return world, _fail(index, prim, Outcome.MOTION_PLANNING_FAILURE, err[0], err[1])
    new, segs, records, non_first = ok
    held = (prim.target, world.attachment.grasp)
    new = new.release()
    return new, PrimitiveResult(index, prim.kind.value, prim.target, Outcome.SUCCESS,
                                duration=sum(s.duration for s in segs), non_first_candidates=non_first,
                                key_moments=records, segments=segs, held=held)


def execute_primitive(policy: Policy, primitive_index: int, world: WorldState, chain: KinematicChain,
                      params: ExecParams = ExecParams()) -> tuple[WorldState, PrimitiveResult]:
    """Run one primitive; on any failure the input world is returned unchanged."""
    prim = policy.primitives[primitive_index]
    belief = world
    try:
        if params.estimate_poses:
            belief = _estimate(world, policy, params, _seed(params, primitive_index, 7))
        if prim.kind is PrimitiveKind.MAKE:
            instantiate_trajectory(policy, primitive_index, belief)
            return _make(policy, primitive_index, world, belief, chain, params)
        if prim.kind is PrimitiveKind.MAINTAIN:
            return _maintain(policy, primitive_index, world, belief, chain, params)
        return _break(policy, primitive_index, world, belief, chain, params)
    except MissingReference as exc:
        return world, _fail(primitive_index, prim, Outcome.MISSING_REFERENCE, str(exc), prim.span[0])
    except PoseEstimationError as exc:
        return world, _fail(primitive_index, prim, Outcome.POSE_ESTIMATION_FAILURE, str(exc), prim.span[0])


def _concat(segments) -> tuple[np.ndarray, np.ndarray]:
    times, configs = [np.zeros(1)], []
    t0 = 0.0
    for s in segments:
        if not configs:
            configs.append(s.configs[:1])
        if s.duration > 0:
            times.append(s.times[1:] + t0)
            configs.append(s.configs[1:])
            t0 += s.duration
    return np.concatenate(times), np.vstack(configs)


def _step_results(policy: Policy, prims: list) -> list:
    out = []
    done = {p.index: p for p in prims}
    for step in policy.steps:
        s, e = step["start"], step["end"]
        involved = [i for i, p in enumerate(policy.primitives) if p.span[0] <= e and p.span[1] >= s]
        ok = bool(involved) and all(i in done and done[i].outcome is Outcome.SUCCESS for i in involved)
        ok = ok and all(k.contacts_ok for i in involved if i in done for k in done[i].key_moments if s <= k.frame <= e)
        out.append({"name": step["name"], "success": ok})
    return out


def _log_primitive(world: WorldState, res: PrimitiveResult, chain, t0: float, rate: float, rows: list) -> float:
    """Replay one primitive's segments on the ``k / rate`` grid, appending (t, q, poses) rows."""
    w = world.release()
    if res.held is not None:
        w = w.attach(*res.held)
    for seg in res.segments:
        if seg.duration <= 0:
            continue
        k0 = math.ceil(t0 * rate - 1e-9)
        k1 = math.floor((t0 + seg.duration) * rate + 1e-9)
        for k in range(k0, k1 + 1):
            t = k / rate
            if rows and t <= rows[-1][0]:
                continue
            w = w.with_q(seg.at(t - t0), chain)
            rows.append((t, w.q.copy(), {n: w.poses[n] for n in w.poses if w.visible(n)}))
        t0 += seg.duration
    return t0


def execute_policy(policy: Policy, world: WorldState, chain: KinematicChain, params: ExecParams = ExecParams(),
                   log_rate: float = 100.0) -> tuple[WorldState, ExecutionResult]:
    """Execute primitives in order, stopping at the first failure unless told to continue.

    ``pose_log`` holds (time, q, visible object poses) sampled at ``log_rate``.
    """
    results = []
    segments = []
    q0 = world.q.copy()
    log = [(0.0, q0, {n: world.poses[n] for n in world.poses if world.visible(n)})]
    t0 = 0.0
    for i in range(len(policy.primitives)):
        before = world
        world, res = execute_primitive(policy, i, world, chain, params)
        results.append(res)
        segments.extend(res.segments)
        t0 = _log_primitive(before, res, chain, t0, log_rate, log)
        if res.outcome is not Outcome.SUCCESS and not params.continue_on_error:
            break
    if segments:
        times, configs = _concat(segments)
    else:
        times, configs = np.zeros(1), q0[None, :]
    result = ExecutionResult(results, float(times[-1]), times, configs, log, _step_results(policy, results))
    return world, result
