"""On-disk formats: demonstration directories, policy and scene JSON, PLY clouds.

Binary data is little-endian throughout. See FORMATS.md for byte layouts.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .contact_analysis import ContactLocation
from .demo import DemoMeta, Demonstration, Frame
from .errors import FormatError
from .geometry import CollisionModel, PointCloud, Pose
from .primitive_learning import (BreakContactParams, KeyMoment, MaintainContactParams, MakeContactParams,
                                 ObjectModel, Policy, Primitive, PrimitiveKind, TrackEntry)

DEMO_FORMAT, DEMO_VERSION = "contactlfd-demo", 1
POLICY_FORMAT, POLICY_VERSION = "contactlfd-policy", 1
SCENE_FORMAT, SCENE_VERSION = "contactlfd-scene", 1

_COUNT = struct.Struct("<I")


def check_header(d: dict, fmt: str, version: int, path) -> None:
    if not isinstance(d, dict) or d.get("format") != fmt:
        found = d.get("format") if isinstance(d, dict) else type(d).__name__
        raise FormatError(f"{path}: expected format {fmt!r}, found {found!r}")
    if d.get("version") != version:
        raise FormatError(f"{path}: format version {d.get('version')!r} found, version {version} supported")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc


def write_json(path, d: dict) -> None:
    with open(path, "w") as fh:
        json.dump(d, fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- PLY ---------------------------------------------------------------------

def write_ply(path, points: np.ndarray) -> None:
    pts = np.ascontiguousarray(points, dtype="<f8").reshape(-1, 3)
    header = ("ply\nformat binary_little_endian 1.0\n"
              f"element vertex {len(pts)}\n"
              "property double x\nproperty double y\nproperty double z\nend_header\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pts.tobytes())


def read_ply(path) -> np.ndarray:
    """Binary little-endian PLY with double x, y, z vertex properties only."""
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply\n") or end < 0:
        raise FormatError(f"{path}: offset 0: not a PLY file")
    lines = data[:end].decode("ascii", "replace").splitlines()
    n = None
    props = []
    for line in lines[1:]:
        parts = line.split()
        if parts[:1] == ["format"] and parts[1:2] != ["binary_little_endian"]:
            raise FormatError(f"{path}: unsupported PLY encoding {parts[1:2]}")
        if parts[:2] == ["element", "vertex"]:
            n = int(parts[2])
        elif parts[:1] == ["property"]:
            props.append((parts[1], parts[2]))
    if n is None or props != [("double", "x"), ("double", "y"), ("double", "z")]:
        raise FormatError(f"{path}: PLY must hold one vertex element with double x, y, z")
    start = end + len(b"end_header\n")
    need = n * 24
    if len(data) - start < need:
        raise FormatError(f"{path}: offset {len(data)}: truncated, {need} vertex bytes expected from offset {start}")
    return np.frombuffer(data, dtype="<f8", count=n * 3, offset=start).reshape(n, 3).astype(float)


# -- demonstrations ------------------------------------------------------------

def save_demo(demo: Demonstration, path) -> None:
    """Write ``meta.json``, ``models/<name>.ply`` and one ``frames/<index>.bin`` per frame."""
    root = Path(path)
    (root / "models").mkdir(parents=True, exist_ok=True)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    models = {}
    for name, cloud in demo.models.items():
        entry = {"file": f"models/{name}.ply"}
        write_ply(root / entry["file"], cloud.points)
        parts = demo.model_parts.get(name)
        if parts:
            entry["parts"] = []
            for i, part in enumerate(parts):
                rel = f"models/{name}.part{i}.ply"
                write_ply(root / rel, part.points)
                entry["parts"].append(rel)
        models[name] = entry
    frames = []
    width = max(6, len(str(len(demo.frames))))
    for frame in demo.frames:
        rel = f"frames/{frame.index:0{width}d}.bin"
        blocks = []
        offset = 0
        with open(root / rel, "wb") as fh:
            items = [(n, frame.clouds[n]) for n in demo.objects if n in frame.clouds]
            if frame.hand is not None:
                items.append(("hand", frame.hand))
            for name, cloud in items:
                pts = np.ascontiguousarray(cloud.points, dtype="<f8").reshape(-1, 3)
                fh.write(_COUNT.pack(len(pts)))
                fh.write(pts.tobytes())
                blocks.append({"name": name, "offset": offset, "count": len(pts)})
                offset += _COUNT.size + pts.nbytes
        frames.append({"index": frame.index, "file": rel, "bytes": offset, "blocks": blocks})
    meta = {
        "format": DEMO_FORMAT, "version": DEMO_VERSION,
        "frame_rate": demo.meta.frame_rate, "objects": list(demo.meta.objects),
        "symmetry": {k: [float(v) for v in a] for k, a in demo.meta.symmetry.items()},
        "phantom": list(demo.meta.phantom), "steps": list(demo.meta.steps),
        "model_eps": dict(demo.meta.model_eps), "models": models, "frames": frames,
    }
    write_json(root / "meta.json", meta)


def _read_block(data: bytes, block: dict, path) -> np.ndarray:
    off = int(block["offset"])
    if off + _COUNT.size > len(data):
        raise FormatError(f"{path}: offset {off}: truncated before block count of {block['name']!r}")
    (n,) = _COUNT.unpack_from(data, off)
    if n != block["count"]:
        raise FormatError(f"{path}: offset {off}: block {block['name']!r} holds {n} points, meta says {block['count']}")
    start = off + _COUNT.size
    if start + 24 * n > len(data):
        raise FormatError(f"{path}: offset {len(data)}: truncated inside block {block['name']!r} "
                          f"({start + 24 * n} bytes needed)")
    return np.frombuffer(data, dtype="<f8", count=3 * n, offset=start).reshape(n, 3).astype(float)


def load_demo(path) -> Demonstration:
    root = Path(path)
    meta_path = root / "meta.json"
    m = read_json(meta_path)
    check_header(m, DEMO_FORMAT, DEMO_VERSION, meta_path)
    try:
        meta = DemoMeta(float(m["frame_rate"]), list(m["objects"]), {k: list(v) for k, v in m["symmetry"].items()},
                        list(m.get("steps", [])), dict(m.get("model_eps", {})), list(m.get("phantom", [])))
        models, parts = {}, {}
        for name, entry in m["models"].items():
            models[name] = PointCloud(read_ply(root / entry["file"]), name)
            if "parts" in entry:
                parts[name] = [PointCloud(read_ply(root / p), name) for p in entry["parts"]]
        frames = []
        for fr in m["frames"]:
            fpath = root / fr["file"]
            try:
                data = fpath.read_bytes()
            except OSError as exc:
                raise FormatError(f"{fpath}: {exc.strerror}") from exc
            if len(data) != fr["bytes"]:
                raise FormatError(f"{fpath}: offset {len(data)}: file holds {len(data)} bytes, meta says {fr['bytes']}")
            clouds, hand = {}, None
            for block in fr["blocks"]:
                pts = _read_block(data, block, fpath)
                if block["name"] == "hand":
                    hand = PointCloud(pts, "hand")
                elif block["name"] in meta.objects:
                    clouds[block["name"]] = PointCloud(pts, block["name"])
                else:
                    raise FormatError(f"{fpath}: offset {block['offset']}: unknown object {block['name']!r}")
            frames.append(Frame(int(fr["index"]), clouds, hand))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{meta_path}: malformed demonstration metadata: {exc}") from exc
    return Demonstration(meta, frames, models, parts)


# -- policies ----------------------------------------------------------------

def _pose_list(poses: dict) -> list:
    return [{"target": a, "reference": b, "pose": p.to_dict()} for (a, b), p in sorted(poses.items())]


def _pairs(s) -> list:
    return sorted([list(p) for p in s])


def _params_to_dict(kind: PrimitiveKind, p) -> dict:
    if kind is PrimitiveKind.MAKE:
        return {"locations": [{"point": l.point.tolist(), "support": l.support} for l in p.locations],
                "approach": np.asarray(p.approach).tolist(),
                "manual_override": None if p.manual_override is None else
                [{"point": np.asarray(l.point).tolist(), "support": l.support} for l in p.manual_override]}
    if kind is PrimitiveKind.MAINTAIN:
        return {
            "key_moments": [{"frame": k.frame, "timestamp": k.timestamp, "reference": k.reference,
                             "relative_poses": _pose_list(k.relative_poses), "contact_set": _pairs(k.contact_set),
                             "apart_set": _pairs(k.apart_set)} for k in p.key_moments],
            "dense_track": [{"timestamp": e.timestamp, "frame": e.frame, "reference": e.reference,
                             "pose": e.pose.to_dict(), "blend_reference": e.blend_reference,
                             "blend_pose": None if e.blend_pose is None else e.blend_pose.to_dict(),
                             "weight": e.weight} for e in p.dense_track],
        }
    return {"final_pose": p.final_pose.to_dict(), "reference": p.reference,
            "manual_override": None if p.manual_override is None else p.manual_override.to_dict()}


def _locs(items) -> tuple:
    return tuple(ContactLocation(np.asarray(l["point"], float), int(l["support"])) for l in items)


def _params_from_dict(kind: PrimitiveKind, d: dict):
    if kind is PrimitiveKind.MAKE:
        ov = d.get("manual_override")
        return MakeContactParams(_locs(d["locations"]), np.asarray(d["approach"], float),
                                 None if ov is None else _locs(ov))
    if kind is PrimitiveKind.MAINTAIN:
        keys = tuple(KeyMoment(int(k["frame"]), float(k["timestamp"]), k["reference"],
                               {(r["target"], r["reference"]): Pose.from_dict(r["pose"]) for r in k["relative_poses"]},
                               frozenset(tuple(p) for p in k["contact_set"]),
                               frozenset(tuple(p) for p in k.get("apart_set", [])))
                     for k in d["key_moments"])
        dense = tuple(TrackEntry(float(e["timestamp"]), int(e["frame"]), e["reference"], Pose.from_dict(e["pose"]),
                                 e.get("blend_reference"),
                                 None if e.get("blend_pose") is None else Pose.from_dict(e["blend_pose"]),
                                 float(e.get("weight", 0.0)))
                      for e in d["dense_track"])
        return MaintainContactParams(keys, dense)
    ov = d.get("manual_override")
    return BreakContactParams(Pose.from_dict(d["final_pose"]), d["reference"], None if ov is None else Pose.from_dict(ov))


def policy_to_dict(policy: Policy) -> dict:
    return {
        "format": POLICY_FORMAT, "version": POLICY_VERSION,
        "frame_rate": policy.frame_rate, "steps": list(policy.steps),
        "initial_poses": {k: p.to_dict() for k, p in policy.initial_poses.items()},
        "object_models": {
            name: {"cloud": m.cloud.points.tolist(), "collision": m.collision.to_list(),
                   "symmetry_axis": None if m.symmetry_axis is None else np.asarray(m.symmetry_axis).tolist(),
                   "phantom": m.phantom}
            for name, m in policy.object_models.items()},
        "primitives": [{"kind": p.kind.value, "target": p.target, "span": list(p.span),
                        "params": None if p.params is None else _params_to_dict(p.kind, p.params)}
                       for p in policy.primitives],
    }


def policy_from_dict(d: dict, path="<policy>") -> Policy:
    check_header(d, POLICY_FORMAT, POLICY_VERSION, path)
    try:
        models = {}
        for name, m in d["object_models"].items():
            axis = m.get("symmetry_axis")
            models[name] = ObjectModel(PointCloud(np.asarray(m["cloud"], float).reshape(-1, 3), name),
                                       CollisionModel.from_list(m["collision"]),
                                       None if axis is None else np.asarray(axis, float), bool(m.get("phantom", False)))
        prims = []
        for p in d["primitives"]:
            kind = PrimitiveKind(p["kind"])
            params = None if p["params"] is None else _params_from_dict(kind, p["params"])
            prims.append(Primitive(kind, p["target"], tuple(p["span"]), params))
        return Policy(tuple(prims), models, float(d["frame_rate"]), tuple(d.get("steps", [])),
                      {k: Pose.from_dict(v) for k, v in d.get("initial_poses", {}).items()})
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed policy: {exc}") from exc


def save_policy(policy: Policy, path) -> None:
    write_json(path, policy_to_dict(policy))


def load_policy(path) -> Policy:
    return policy_from_dict(read_json(path), path)


# -- scenes --------------------------------------------------------------------

def load_scene(path) -> dict:
    d = read_json(path)
    check_header(d, SCENE_FORMAT, SCENE_VERSION, path)
    if not isinstance(d.get("objects"), dict):
        raise FormatError(f"{path}: scene needs an 'objects' mapping")
    return d


def save_scene(scene: dict, path) -> None:
    write_json(path, scene)


def save_truth(truth: dict, path) -> None:
    write_json(os.fspath(path), truth)
