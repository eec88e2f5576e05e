"""Rigid-body math, point-cloud utilities, clustering and convex collision geometry."""
from .clouds import PointCloud, cluster, min_distance, remove_statistical_outliers, transform_cloud
from .convex import (
    CollisionModel,
    ConvexShape,
    Separation,
    build_collision_model,
    build_collision_model_from_parts,
    convex_distance,
    convex_hull,
    model_separation,
    model_signed_separation,
    signed_separation,
)
from .transforms import Pose, compose, interpolate_pose, invert, pose_distance, poses_close

__all__ = [
    "CollisionModel", "ConvexShape", "PointCloud", "Pose", "Separation",
    "build_collision_model", "build_collision_model_from_parts", "cluster", "compose",
    "convex_distance", "convex_hull", "interpolate_pose", "invert", "min_distance",
    "model_separation", "model_signed_separation", "pose_distance", "poses_close",
    "remove_statistical_outliers", "signed_separation", "transform_cloud",
]
