"""Alternative goal poses: symmetry rotations and small perturbations of a desired object pose."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..geometry import CollisionModel, Pose, model_signed_separation

DEFAULT_STEP = math.radians(10.0)
DEFAULT_PERTURBATIONS = tuple(math.radians(a) for a in (5.0, -5.0, 10.0, -10.0))


@dataclass(frozen=True)
class SymmetrySpec:
    axis: Optional[np.ndarray] = None
    perturbation_angles: tuple = DEFAULT_PERTURBATIONS
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.axis is not None:
            a = np.asarray(self.axis, dtype=float).reshape(3)
            n = np.linalg.norm(a)
            if n < 1e-12:
                raise ValueError("symmetry axis must be non-zero")
            object.__setattr__(self, "axis", a / n)
        if not 0 < self.step <= 2 * math.pi:
            raise ValueError("step must lie in (0, 2π]")
        object.__setattr__(self, "perturbation_angles", tuple(float(a) for a in self.perturbation_angles))


@dataclass(frozen=True, eq=False)
class ContactConstraint:
    """Separation band a candidate pose of ``model`` must keep to ``other`` at ``other_pose``.

    A candidate passes when ``-max_penetration <= signed separation <= band``.
    """

    model: CollisionModel
    other: CollisionModel
    other_pose: Pose
    band: float
    max_penetration: float = 0.005

    def satisfied(self, pose: Pose) -> bool:
        if math.isinf(self.max_penetration):
            from ..geometry import model_separation
            return model_separation(self.model, pose, self.other, self.other_pose).separation <= self.band
        s = model_signed_separation(self.model, pose, self.other, self.other_pose)
        return -self.max_penetration <= s <= self.band


def _orthonormal_complement(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def alternative_offsets(sym: SymmetrySpec) -> list[Pose]:
    """Model-frame rotations applied on the right of the desired pose, identity first."""
    out = [Pose.identity()]
    if sym.axis is not None:
        n = int(round(2 * math.pi / sym.step))
        for k in range(1, n):
            out.append(Pose.from_axis_angle(sym.axis, k * sym.step))
        axes = _orthonormal_complement(sym.axis)
    else:
        axes = (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    for ax in axes:
        for ang in sym.perturbation_angles:
            out.append(Pose.from_axis_angle(ax, ang))
    return out


def propose_alternative_poses(desired: Pose, sym: SymmetrySpec,
                              contact_pairs: Sequence[ContactConstraint] = (),
                              with_offsets: bool = False) -> list:
    """Desired pose first, then symmetry rotations, then perturbations; band violators dropped.

    The desired pose is never filtered. With ``with_offsets`` the result is a
    list of ``(pose, offset)`` pairs so callers can carry the chosen offset.
    """
    out = []
    for i, off in enumerate(alternative_offsets(sym)):
        pose = desired @ off
        if i > 0 and not all(c.satisfied(pose) for c in contact_pairs):
            continue
        out.append((pose, off) if with_offsets else pose)
    return out
