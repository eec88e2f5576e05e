"""Time parameterization, duration matching and fixed-rate resampling of joint paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateTrajectory
from .kinematics import KinematicChain
from .rrt import JointPath

GRID = 1e-3


@dataclass(frozen=True, eq=False)
class JointTrajectory:
    times: np.ndarray
    configs: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        q = np.array(self.configs, dtype=float)
        if q.ndim != 2 or len(q) != len(t) or len(t) == 0:
            raise ValueError("times and configs must have matching non-zero length")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        t.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "configs", q)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.configs[:, j]) for j in range(self.configs.shape[1])])


def _segment_profile(delta: np.ndarray, vel: np.ndarray, acc: np.ndarray) -> tuple[float, float, float]:
    """(duration, path-speed limit, path-accel limit) of a rest-to-rest trapezoid on s in [0, 1]."""
    mag = np.abs(delta)
    moving = mag > 0
    if not moving.any():
        return 0.0, 0.0, 0.0
    vs = float(np.min(vel[moving] / mag[moving]))
    as_ = float(np.min(acc[moving] / mag[moving]))
    if vs * vs >= as_:
        # triangular: peak speed never reaches vs
        return 2.0 * math.sqrt(1.0 / as_), math.sqrt(as_), as_
    return 1.0 / vs + vs / as_, vs, as_


def _s_of_t(t: float, T: float, vp: float, a: float) -> float:
    ta = vp / a
    if t <= 0:
        return 0.0
    if t >= T:
        return 1.0
    if t < ta:
        return 0.5 * a * t * t
    if t > T - ta:
        r = T - t
        return 1.0 - 0.5 * a * r * r
    return 0.5 * a * ta * ta + vp * (t - ta)


def duration_bound(path: JointPath, chain: KinematicChain) -> float:
    """Sum over segments of max_j |dq_j| / v_j plus max_j v_j / a_j for moving segments."""
    w = path.waypoints
    total = 0.0
    for a, b in zip(w[:-1], w[1:]):
        d = np.abs(b - a)
        if np.any(d > 0):
            total += float(np.max(d / chain.vel_limits)) + float(np.max(chain.vel_limits / chain.acc_limits))
    return total


def time_parameterize(path: JointPath, chain: KinematicChain, dt: float = GRID) -> JointTrajectory:
    """Rest-to-rest synchronized trapezoidal profile per segment, sampled every ``dt``.

    Every joint of a segment follows the same normalized profile, scaled so
    the most constrained joint saturates its velocity or acceleration limit.
    The final sample falls exactly on the total duration.
    """
    w = path.waypoints
    if w.shape[1] != chain.n_joints:
        from ..errors import DimensionMismatch
        raise DimensionMismatch("path dimension does not match chain")
    segs = []
    t0 = 0.0
    for a, b in zip(w[:-1], w[1:]):
        T, vp, acc = _segment_profile(b - a, chain.vel_limits, chain.acc_limits)
        if T > 0:
            segs.append((t0, T, vp, acc, a, b - a))
            t0 += T
    total = t0
    if total == 0.0:
        return JointTrajectory(np.zeros(1), w[:1].copy())
    n = int(math.floor(total / dt))
    times = np.arange(n + 1) * dt
    # keep the last interval between dt/2 and 3dt/2 so difference quotients stay well conditioned
    if total - times[-1] < 0.5 * dt and len(times) > 1:
        times = times[:-1]
    times = np.append(times, total)
    starts = np.array([s[0] for s in segs])
    configs = np.empty((len(times), w.shape[1]))
    for k, t in enumerate(times):
        i = max(0, int(np.searchsorted(starts, t, side="right")) - 1)
        s0, T, vp, acc, a, d = segs[i]
        configs[k] = a + _s_of_t(t - s0, T, vp, acc) * d
    configs[-1] = w[-1]
    return JointTrajectory(times, configs)


def match_duration(traj: JointTrajectory, target: float) -> JointTrajectory:
    """Stretch ``traj`` uniformly to ``target`` seconds; never compresses."""
    if target < 0:
        raise ValueError("target duration must be >= 0")
    if traj.duration >= target:
        return traj
    if traj.duration == 0.0:
        raise DegenerateTrajectory("cannot stretch a zero-duration trajectory")
    times = traj.times * (target / traj.duration)
    times[-1] = target
    return JointTrajectory(times, traj.configs)


def resample(traj: JointTrajectory, rate: float = 1000.0) -> tuple[np.ndarray, np.ndarray]:
    """Samples at k / rate for k = 0..floor(duration * rate), linear in joint space."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    n = int(math.floor(traj.duration * rate + 1e-9)) + 1
    t = np.arange(n) / rate
    q = np.column_stack([np.interp(t, traj.times, traj.configs[:, j]) for j in range(traj.configs.shape[1])])
    return t, q


def finite_difference_ok(traj: JointTrajectory, chain: KinematicChain, slack: float = 1e-6) -> bool:
    """Velocity and central-difference acceleration of the samples within limits (relative slack)."""
    t, q = traj.times, traj.configs
    if len(t) < 2:
        return True
    h = np.diff(t)[:, None]
    v = np.diff(q, axis=0) / h
    if np.any(np.abs(v) > chain.vel_limits * (1 + slack)):
        return False
    if len(t) < 3:
        return True
    acc = 2.0 * (v[1:] - v[:-1]) / (h[1:] + h[:-1])
    return not np.any(np.abs(acc) > chain.acc_limits * (1 + slack))
