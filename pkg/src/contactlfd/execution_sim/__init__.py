"""Kinematic simulation of policy execution."""
from .executor import (ExecParams, ExecutionResult, KeyMomentRecord, Outcome, PrimitiveResult, TimedEntry,
                       TimedObjectTrajectory, execute_policy, execute_primitive, grasp_frame, instantiate_trajectory,
                       pose_error, verify_contacts)
from .world import SimObject, WorldState, build_world

__all__ = [
    "ExecParams", "ExecutionResult", "KeyMomentRecord", "Outcome", "PrimitiveResult", "SimObject", "TimedEntry",
    "TimedObjectTrajectory", "WorldState", "build_world", "execute_policy", "execute_primitive", "grasp_frame",
    "instantiate_trajectory", "pose_error", "verify_contacts",
]
