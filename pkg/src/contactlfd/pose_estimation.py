"""Point-to-point ICP registration and frame-to-frame pose tracking."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import LowFitness, NeverObserved, NoCorrespondences, TooFewPoints
from .geometry import PointCloud, Pose


@dataclass(frozen=True)
class IcpParams:
    max_iterations: int = 60
    correspondence_max_dist: float = 0.05
    convergence_delta: float = 1e-7
    min_fitness: float = 0.3
    # large models are thinned by a fixed stride; None keeps every point
    max_model_points: int | None = 2000

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.correspondence_max_dist <= 0:
            raise ValueError("correspondence_max_dist must be > 0")
        if self.convergence_delta < 0:
            raise ValueError("convergence_delta must be >= 0")
        if not 0.0 <= self.min_fitness <= 1.0:
            raise ValueError("min_fitness must lie in [0, 1]")
        if self.max_model_points is not None and self.max_model_points < 3:
            raise ValueError("max_model_points must be >= 3")


@dataclass(frozen=True)
class PoseEstimate:
    pose: Pose
    rmse: float
    fitness: float
    iterations: int
    rmse_history: tuple = field(default=(), repr=False)


class Missing:
    """Marker for a frame in which the tracked object was not observed."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Missing"

    def __bool__(self):
        return False


MISSING = Missing()


def best_fit_transform(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares rotation R and translation t with ``R @ src + t ≈ dst`` (Kabsch)."""
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    H = (src - cs).T @ (dst - cd)
    U, _, Vt = np.linalg.svd(H)
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    R = Vt.T @ D @ U.T
    return R, cd - R @ cs


def icp_register(model: PointCloud, observed: PointCloud, init: Pose | None = None,
                 params: IcpParams = IcpParams(), tree: cKDTree | None = None) -> PoseEstimate:
    """Register ``model`` onto ``observed``; the returned pose maps model into the scene.

    Each iteration gates nearest-neighbor correspondences at
    ``correspondence_max_dist`` and solves the rigid update in closed form.
    An update that would raise the inlier RMSE is rejected and the loop
    stops, so ``rmse_history`` never increases.
    """
    if len(model) < 3 or len(observed) < 3:
        raise TooFewPoints("ICP needs at least 3 points in each cloud")
    init = init or Pose.identity()
    tree = tree or cKDTree(observed.points)
    obs = observed.points
    src = model.points
    if params.max_model_points is not None and len(src) > params.max_model_points:
        src = src[:: -(-len(src) // params.max_model_points)]
    n = len(src)
    gate = params.correspondence_max_dist

    R = init.rotation_matrix.copy()
    t = init.translation.copy()

    def correspond(R, t):
        moved = src @ R.T + t
        d, j = tree.query(moved, k=1, distance_upper_bound=gate)
        ok = np.isfinite(d)
        return moved, d, j, ok

    moved, d, j, ok = correspond(R, t)
    if not ok.any():
        raise NoCorrespondences(f"no model point of {model.label!r} within {gate} m of the observation")
    rmse = float(np.sqrt(np.mean(d[ok] ** 2)))
    history = [rmse]
    iterations = 0
    for _ in range(params.max_iterations):
        if ok.sum() < 3:
            break
        dR, dt = best_fit_transform(moved[ok], obs[j[ok]])
        R_new = dR @ R
        t_new = dR @ t + dt
        moved_n, d_n, j_n, ok_n = correspond(R_new, t_new)
        if not ok_n.any():
            break
        rmse_n = float(np.sqrt(np.mean(d_n[ok_n] ** 2)))
        if rmse_n > rmse:
            break
        iterations += 1
        delta = rmse - rmse_n
        R, t, moved, d, j, ok, rmse = R_new, t_new, moved_n, d_n, j_n, ok_n, rmse_n
        history.append(rmse)
        if delta < params.convergence_delta:
            break

    fitness = float(ok.sum()) / n
    est = PoseEstimate(Pose.from_rt(R, t), rmse, fitness, iterations, tuple(history))
    if fitness < params.min_fitness:
        raise LowFitness(f"fitness {fitness:.3f} below {params.min_fitness} for {model.label!r}")
    return est


def track_poses(model: PointCloud, frames, name: str, params: IcpParams = IcpParams(),
                init: Pose | None = None) -> list:
    """Track ``name`` through ``frames``; each entry is a PoseEstimate or ``MISSING``.

    ``frames`` is a sequence of mappings from object name to PointCloud (or
    objects with a ``clouds`` attribute). The first detection starts from
    ``init`` (identity when omitted); later ones from the previous estimate.
    """
    out = []
    prev = None
    for frame in frames:
        clouds = getattr(frame, "clouds", frame)
        cloud = clouds.get(name)
        if cloud is None or len(cloud) == 0:
            out.append(MISSING)
            continue
        start = prev.pose if prev is not None else (init or Pose.identity())
        est = icp_register(model, cloud, start, params)
        out.append(est)
        prev = est
    if prev is None:
        raise NeverObserved(f"object {name!r} is absent from every frame")
    return out
