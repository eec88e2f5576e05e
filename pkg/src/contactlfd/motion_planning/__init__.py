"""Kinematics, collision checking, alternative poses, RRT-Connect and trajectory timing."""
from .alternatives import (ContactConstraint, SymmetrySpec, alternative_offsets,
                           propose_alternative_poses)
from .collision import Attachment, Scene, in_collision, self_collision_pairs
from .kinematics import (Joint, KinematicChain, fk_matrices, forward_kinematics, inverse_kinematics,
                         jacobian, load_bundled_chain, planar_chain, random_config, tool_error)
from .rrt import JointPath, RrtParams, interpolate_path, path_free, plan_rrt_connect, segment_free
from .timing import (JointTrajectory, duration_bound, finite_difference_ok, match_duration, resample,
                     time_parameterize)

__all__ = [
    "Attachment", "ContactConstraint", "Joint", "JointPath", "JointTrajectory", "KinematicChain", "RrtParams",
    "Scene", "SymmetrySpec", "alternative_offsets", "duration_bound", "finite_difference_ok", "fk_matrices",
    "forward_kinematics", "in_collision", "interpolate_path", "inverse_kinematics", "jacobian",
    "load_bundled_chain", "match_duration", "path_free", "plan_rrt_connect", "planar_chain",
    "propose_alternative_poses", "random_config", "resample", "segment_free", "self_collision_pairs",
    "time_parameterize", "tool_error",
]
