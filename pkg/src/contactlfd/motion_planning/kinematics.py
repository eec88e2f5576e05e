"""Serial kinematic chains: description files, forward kinematics, damped least-squares IK."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import DimensionMismatch, FormatError, NoSolution
from ..geometry import CollisionModel, Pose
from ..geometry.transforms import rotation_vector

ROBOT_FORMAT = "contactlfd-robot"
ROBOT_VERSION = 1


@dataclass(frozen=True)
class Joint:
    axis: np.ndarray
    origin: Pose
    limits: tuple
    vel_limit: float
    acc_limit: float
    kind: str = "revolute"
    name: str = ""

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(a)
        if n < 1e-12:
            raise ValueError("joint axis must be non-zero")
        object.__setattr__(self, "axis", a / n)
        lo, hi = (float(v) for v in self.limits)
        if not lo < hi:
            raise ValueError(f"joint {self.name!r}: limits min {lo} must be < max {hi}")
        object.__setattr__(self, "limits", (lo, hi))
        if self.vel_limit <= 0 or self.acc_limit <= 0:
            raise ValueError(f"joint {self.name!r}: velocity and acceleration limits must be > 0")
        if self.kind not in ("revolute", "prismatic"):
            raise ValueError(f"unknown joint kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class KinematicChain:
    """Joints in order from base to tip.

    ``link_collision[i]`` is the collision model of link ``i`` (link 0 is the
    base, link ``i`` moves with joint ``i``); ``None`` means no geometry.
    ``ignore_pairs`` lists non-adjacent link pairs exempt from self-collision.
    """

    joints: tuple
    tool_frame: Pose = field(default_factory=Pose.identity)
    link_collision: tuple = ()
    base: Pose = field(default_factory=Pose.identity)
    ignore_pairs: frozenset = frozenset()
    ready: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        lc = tuple(self.link_collision) or (None,) * (len(self.joints) + 1)
        if len(lc) != len(self.joints) + 1:
            raise ValueError("link_collision needs one entry per link (joints + 1)")
        object.__setattr__(self, "link_collision", lc)
        object.__setattr__(self, "ignore_pairs", frozenset(tuple(sorted(p)) for p in self.ignore_pairs))

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([j.limits[0] for j in self.joints])

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([j.limits[1] for j in self.joints])

    @cached_property
    def vel_limits(self) -> np.ndarray:
        return np.array([j.vel_limit for j in self.joints])

    @cached_property
    def acc_limits(self) -> np.ndarray:
        return np.array([j.acc_limit for j in self.joints])

    @cached_property
    def _origins(self) -> np.ndarray:
        return np.stack([j.origin.as_matrix() for j in self.joints])

    @cached_property
    def _axes(self) -> np.ndarray:
        return np.stack([j.axis for j in self.joints])

    @cached_property
    def _rodrigues(self):
        K = np.zeros((self.n_joints, 3, 3))
        for i, (x, y, z) in enumerate(self._axes):
            K[i] = [[0, -z, y], [z, 0, -x], [-y, x, 0]]
        return K, K @ K

    @cached_property
    def _base_matrix(self) -> np.ndarray:
        return self.base.as_matrix()

    @cached_property
    def _tool_matrix(self) -> np.ndarray:
        return self.tool_frame.as_matrix()

    @cached_property
    def _revolute(self) -> np.ndarray:
        return np.array([j.kind == "revolute" for j in self.joints])

    def within_limits(self, q, tol: float = 0.0) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(-1)
        if len(q) != self.n_joints:
            raise DimensionMismatch(f"config has {len(q)} values, chain has {self.n_joints} joints")
        return q

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": ROBOT_FORMAT,
            "version": ROBOT_VERSION,
            "name": self.name,
            "base": self.base.to_dict(),
            "tool_frame": self.tool_frame.to_dict(),
            "ready": None if self.ready is None else [float(v) for v in self.ready],
            "ignore_pairs": [list(p) for p in sorted(self.ignore_pairs)],
            "joints": [{
                "name": j.name, "kind": j.kind, "axis": j.axis.tolist(), "origin": j.origin.to_dict(),
                "limits": list(j.limits), "vel_limit": j.vel_limit, "acc_limit": j.acc_limit,
            } for j in self.joints],
            "links": [None if m is None else m.to_list() for m in self.link_collision],
        }

    @classmethod
    def from_dict(cls, d: dict) -> KinematicChain:
        if d.get("format") != ROBOT_FORMAT:
            raise FormatError(f"not a robot description (format={d.get('format')!r})")
        if d.get("version") != ROBOT_VERSION:
            raise FormatError(f"robot description version {d.get('version')!r}, supported {ROBOT_VERSION}")
        try:
            joints = tuple(Joint(np.array(j["axis"], float), Pose.from_dict(j["origin"]), tuple(j["limits"]),
                                 float(j["vel_limit"]), float(j["acc_limit"]), j.get("kind", "revolute"),
                                 j.get("name", "")) for j in d["joints"])
            links = tuple(None if m is None else CollisionModel.from_list(m) for m in d.get("links", []))
            ready = d.get("ready")
            return cls(joints, Pose.from_dict(d.get("tool_frame", Pose.identity().to_dict())), links,
                       Pose.from_dict(d.get("base", Pose.identity().to_dict())),
                       frozenset(tuple(p) for p in d.get("ignore_pairs", [])),
                       None if ready is None else np.array(ready, float), d.get("name", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad robot description: {exc}") from exc

    @classmethod
    def load(cls, path) -> KinematicChain:
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
        return cls.from_dict(d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def load_bundled_chain(name: str = "franka_like") -> KinematicChain:
    return KinematicChain.load(Path(__file__).parent / "robots" / f"{name}.json")


def fk_matrices(chain: KinematicChain, q) -> np.ndarray:
    """Homogeneous link frames: index 0 is the base, ``i`` is link ``i``, last is the tool."""
    q = chain.check(q)
    n = chain.n_joints
    K, K2 = chain._rodrigues
    rev = chain._revolute
    # all joint motions at once, then the serial product
    local = np.zeros((n, 4, 4))
    local[:, 3, 3] = 1.0
    s, c = np.sin(q), np.cos(q)
    local[:, :3, :3] = np.eye(3) + np.where(rev, s, 0.0)[:, None, None] * K + np.where(rev, 1.0 - c, 0.0)[:, None, None] * K2
    local[:, :3, 3] = np.where(rev, 0.0, q)[:, None] * chain._axes
    local = chain._origins @ local
    out = np.empty((n + 2, 4, 4))
    T = chain._base_matrix
    out[0] = T
    for i in range(n):
        T = T @ local[i]
        out[i + 1] = T
    out[n + 1] = T @ chain._tool_matrix
    return out


def forward_kinematics(chain: KinematicChain, q) -> tuple[list[Pose], Pose]:
    """Per-link poses (base first) and the tool pose."""
    Ts = fk_matrices(chain, q)
    return [Pose.from_matrix(T) for T in Ts[:-1]], Pose.from_matrix(Ts[-1])


def jacobian(chain: KinematicChain, q, Ts: np.ndarray | None = None) -> np.ndarray:
    """Geometric 6×n Jacobian of the tool point (linear rows first)."""
    Ts = fk_matrices(chain, q) if Ts is None else Ts
    n = chain.n_joints
    # a joint's own motion leaves its axis and (for revolute joints) its origin fixed,
    # so both can be read off the frame after the joint
    z = np.einsum("nij,nj->ni", Ts[1:n + 1, :3, :3], chain._axes)
    p = Ts[1:n + 1, :3, 3]
    Jm = np.zeros((6, n))
    rev = chain._revolute
    Jm[:3, rev] = np.cross(z[rev], Ts[-1][:3, 3] - p[rev]).T
    Jm[3:, rev] = z[rev].T
    Jm[:3, ~rev] = z[~rev].T
    return Jm


def tool_error(chain: KinematicChain, q, target: Pose) -> tuple[float, float]:
    T = fk_matrices(chain, q)[-1]
    dp = float(np.linalg.norm(target.translation - T[:3, 3]))
    dr = float(np.linalg.norm(rotation_vector(target.rotation_matrix @ T[:3, :3].T)))
    return dp, dr


def _dls_solve(chain, q, Tt_R, Tt_p, tol_pos, tol_rot, max_iter, damping, step_clamp):
    lo, hi = chain.lower, chain.upper
    eye6 = np.eye(6)
    best_q, best_err = q, np.inf
    stall = 0
    for _ in range(max_iter):
        Ts = fk_matrices(chain, q)
        T = Ts[-1]
        e_p = Tt_p - T[:3, 3]
        e_r = rotation_vector(Tt_R @ T[:3, :3].T)
        np_, nr = float(np.linalg.norm(e_p)), float(np.linalg.norm(e_r))
        if np_ < tol_pos and nr < tol_rot:
            return q, True
        err = np_ + nr
        if err < best_err - 1e-9:
            best_q, best_err, stall = q, err, 0
        else:
            stall += 1
            if stall > 15:
                break
        Jm = jacobian(chain, q, Ts)
        e = np.concatenate([e_p, e_r])
        # damping fades as the error shrinks so the last steps converge quickly
        lam = damping * min(1.0, err)
        free = np.ones(len(q), dtype=bool)
        for _ in range(3):
            Jf = Jm * free
            dq = Jf.T @ np.linalg.solve(Jf @ Jf.T + lam * lam * eye6, e)
            # joints resting on a limit and pushed outward are frozen and the step re-solved
            blocked = ((q <= lo) & (dq < 0)) | ((q >= hi) & (dq > 0))
            if not (blocked & free).any():
                break
            free &= ~blocked
        m = float(np.max(np.abs(dq)))
        if m > step_clamp:
            dq *= step_clamp / m
        q = np.clip(q + dq, lo, hi)
    return best_q, False


def inverse_kinematics(chain: KinematicChain, target: Pose, seed=None, tol_pos: float = 1e-4,
                       tol_rot: float = 1e-3, max_restarts: int = 20, rng_seed: int = 0,
                       max_iter: int = 300, damping: float = 0.1, step_clamp: float = 0.2) -> np.ndarray:
    """Damped least-squares IK from ``seed``, then uniform random restarts within limits.

    Raises :class:`NoSolution` once ``max_restarts`` restarts are exhausted.
    """
    if tol_pos <= 0 or tol_rot <= 0:
        raise ValueError("tolerances must be > 0")
    seed = (chain.lower + chain.upper) / 2.0 if seed is None else chain.check(seed)
    rng = np.random.default_rng(rng_seed)
    Tt_R, Tt_p = target.rotation_matrix, target.translation
    # cheap reachability screen: the tool cannot reach beyond the summed link offsets
    reach = sum(np.linalg.norm(j.origin.translation) for j in chain.joints) + np.linalg.norm(chain.tool_frame.translation)
    reach += sum(max(abs(j.limits[0]), abs(j.limits[1])) for j in chain.joints if j.kind == "prismatic")
    if np.linalg.norm(Tt_p - chain.base.translation) > reach + tol_pos:
        raise NoSolution("target beyond the chain's reach")
    q0 = np.clip(np.asarray(seed, float), chain.lower, chain.upper)
    for attempt in range(max_restarts + 1):
        q, ok = _dls_solve(chain, q0, Tt_R, Tt_p, tol_pos, tol_rot, max_iter, damping, step_clamp)
        if ok:
            return q
        q0 = rng.uniform(chain.lower, chain.upper)
    raise NoSolution(f"IK failed after {max_restarts} restarts")


def random_config(chain: KinematicChain, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(chain.lower, chain.upper)


def planar_chain(lengths: Sequence[float], vel: float = 1.0, acc: float = 1.0,
                 limits: tuple = (-np.pi, np.pi)) -> KinematicChain:
    """Revolute chain in the xy-plane with links along x; handy for tests and examples."""
    joints = []
    for i, _ in enumerate(lengths):
        off = 0.0 if i == 0 else lengths[i - 1]
        joints.append(Joint(np.array([0.0, 0.0, 1.0]), Pose.from_translation([off, 0, 0]), limits, vel, acc,
                            name=f"j{i + 1}"))
    return KinematicChain(tuple(joints), Pose.from_translation([lengths[-1], 0, 0]))
