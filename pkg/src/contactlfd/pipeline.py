"""Demonstration to policy: outlier filtering, contacts, segmentation, pose tracking, learning."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contact_analysis import DemoContacts, HysteresisParams, analyze_contacts, filter_demo_outliers
from .demo import Demonstration
from .geometry import Pose, build_collision_model, build_collision_model_from_parts
from .pose_estimation import IcpParams, track_poses
from .primitive_learning import ObjectModel, Policy, learn_policy, segment_primitives


@dataclass(frozen=True)
class LearnParams:
    hysteresis: HysteresisParams = field(default_factory=HysteresisParams)
    icp: IcpParams = field(default_factory=IcpParams)
    d_contact: float = 0.010
    eps: float = 0.01
    min_pts: int = 5
    outlier_k: int = 16
    outlier_std: float = 2.0


@dataclass
class LearnResult:
    policy: Policy
    contacts: DemoContacts
    primitives: list
    pose_tracks: dict


def object_models(demo: Demonstration, params: LearnParams = LearnParams()) -> dict:
    out = {}
    for name in demo.objects:
        eps = demo.meta.model_eps.get(name, params.eps)
        parts = demo.model_parts.get(name)
        if parts:
            col = build_collision_model_from_parts(parts, eps, params.min_pts, params.outlier_k, params.outlier_std)
        else:
            col = build_collision_model(demo.models[name], eps, params.min_pts, params.outlier_k, params.outlier_std)
        out[name] = ObjectModel(demo.models[name], col, demo.symmetry_axis(name), name in demo.meta.phantom)
    return out


def track_objects(demo: Demonstration, params: LearnParams = LearnParams()) -> dict:
    """ICP tracks, each started from the centroid offset at the object's first sighting."""
    tracks = {}
    for name in demo.objects:
        first = next((f.clouds[name] for f in demo.frames if name in f.clouds and len(f.clouds[name])), None)
        if first is None:
            continue
        model = demo.models[name]
        init = Pose.from_translation(first.centroid - model.centroid)
        tracks[name] = track_poses(model, demo.frames, name, params.icp, init)
    return tracks


def learn_from_demo(demo: Demonstration, params: LearnParams = LearnParams()) -> LearnResult:
    clean = filter_demo_outliers(demo, params.outlier_k, params.outlier_std)
    contacts = analyze_contacts(clean, params.hysteresis)
    prims = segment_primitives(contacts.hand)
    tracks = track_objects(clean, params)
    models = object_models(clean, params)
    policy = learn_policy(clean, prims, contacts, tracks, models, params.d_contact, params.eps, params.min_pts)
    return LearnResult(policy, contacts, prims, tracks)


def primitives_summary(prims) -> list:
    return [{"kind": p.kind.value, "target": p.target, "span": [int(p.span[0]), int(p.span[1])]} for p in prims]


def pose_track_errors(tracks: dict, truth: dict, symmetry: dict | None = None) -> dict:
    """Per-object max (translation, rotation) error of a tracked pose against sidecar poses."""
    from .geometry import pose_distance
    out = {}
    for name, track in tracks.items():
        worst = (0.0, 0.0)
        for est, t in zip(track, truth["poses"][name]):
            if not est:
                continue
            dp, dr = pose_distance(est.pose, Pose.from_dict(t))
            if symmetry and symmetry.get(name) is not None:
                a = np.asarray(symmetry[name], float)
                ra, rb = est.pose.rotation_matrix @ a, Pose.from_dict(t).rotation_matrix @ a
                dr = float(np.arccos(np.clip(ra @ rb / (np.linalg.norm(ra) * np.linalg.norm(rb)), -1, 1)))
            worst = (max(worst[0], dp), max(worst[1], dr))
        out[name] = worst
    return out
