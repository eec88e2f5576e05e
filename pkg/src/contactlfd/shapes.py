"""Analytic primitive shapes and area-uniform surface sampling.

Shapes are plain dicts so they serialize directly into scenario and scene files:

- ``{"type": "box", "min": [x, y, z], "max": [x, y, z]}``
- ``{"type": "cylinder", "radius": r, "z0": a, "z1": b}`` (axis z)
- ``{"type": "lathe", "profile": [[r, z], ...]}`` (polyline revolved about z)
- ``{"type": "parts", "parts": [shape, ...]}`` (union, kept as separate convex parts)
- ``{"type": "sphere", "radius": r}``
"""
from __future__ import annotations

import math

import numpy as np

from .errors import InvalidScript


def parts_of(shape: dict) -> list[dict]:
    return list(shape["parts"]) if shape["type"] == "parts" else [shape]


def _box_faces(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    faces = []
    for axis in range(3):
        u, v = [a for a in range(3) if a != axis]
        for val in (lo[axis], hi[axis]):
            faces.append((axis, val, u, v))
    return faces


def _sample_box(shape, spacing, rng):
    lo, hi = np.asarray(shape["min"], float), np.asarray(shape["max"], float)
    out = []
    for axis, val, u, v in _box_faces(lo, hi):
        area = (hi[u] - lo[u]) * (hi[v] - lo[v])
        n = max(1, int(math.ceil(area / spacing ** 2)))
        p = np.empty((n, 3))
        p[:, axis] = val
        p[:, u] = rng.uniform(lo[u], hi[u], n)
        p[:, v] = rng.uniform(lo[v], hi[v], n)
        out.append(p)
    return np.vstack(out)


def _lathe_profile(shape):
    if shape["type"] == "cylinder":
        r, z0, z1 = shape["radius"], shape["z0"], shape["z1"]
        return [(0.0, z0), (r, z0), (r, z1), (0.0, z1)]
    return [tuple(map(float, p)) for p in shape["profile"]]


def _sample_lathe(shape, spacing, rng):
    prof = _lathe_profile(shape)
    out = []
    for (r0, z0), (r1, z1) in zip(prof[:-1], prof[1:]):
        slant = math.hypot(r1 - r0, z1 - z0)
        area = math.pi * (r0 + r1) * slant
        if area <= 0:
            continue
        n = max(1, int(math.ceil(area / spacing ** 2)))
        # radius-weighted position along the segment via inverse CDF of r(t)
        u = rng.uniform(0, 1, n)
        if abs(r1 - r0) < 1e-12:
            t = u
        else:
            t = (np.sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0)) - r0) / (r1 - r0)
        r = r0 + t * (r1 - r0)
        z = z0 + t * (z1 - z0)
        th = rng.uniform(0, 2 * math.pi, n)
        out.append(np.column_stack([r * np.cos(th), r * np.sin(th), z]))
    return np.vstack(out)


def _sample_sphere(shape, spacing, rng):
    r = shape["radius"]
    n = max(8, int(math.ceil(4 * math.pi * r * r / spacing ** 2)))
    # Fibonacci lattice: deterministic and even, starting at the south pole
    k = np.arange(n) + 0.5
    z = -1 + 2 * k / n
    phi = math.pi * (1 + 5 ** 0.5) * k
    s = np.sqrt(1 - z * z)
    pts = r * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return np.vstack([[0.0, 0.0, -r], pts])


def sample_surface(shape: dict, spacing: float, rng: np.random.Generator) -> np.ndarray:
    """Points on the surface of ``shape`` at roughly one per ``spacing``² of area."""
    t = shape.get("type")
    if t == "box":
        return _sample_box(shape, spacing, rng)
    if t in ("cylinder", "lathe"):
        return _sample_lathe(shape, spacing, rng)
    if t == "sphere":
        return _sample_sphere(shape, spacing, rng)
    if t == "parts":
        return np.vstack([sample_surface(p, spacing, rng) for p in shape["parts"]])
    raise InvalidScript(f"unknown shape type {t!r}")


def sample_parts(shape: dict, spacing: float, rng: np.random.Generator) -> list[np.ndarray]:
    return [sample_surface(p, spacing, rng) for p in parts_of(shape)]


def shape_vertices(shape: dict, segments: int = 24) -> list[np.ndarray]:
    """Exact convex-part vertex sets of a shape (lathes and cylinders as polygonal solids)."""
    out = []
    for p in parts_of(shape):
        if p["type"] == "box":
            lo, hi = np.asarray(p["min"], float), np.asarray(p["max"], float)
            out.append(np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]))
        elif p["type"] in ("cylinder", "lathe"):
            th = np.arange(segments) * 2 * math.pi / segments
            ring = np.column_stack([np.cos(th), np.sin(th)])
            pts = []
            for r, z in _lathe_profile(p):
                if r > 0:
                    pts.extend(np.column_stack([r * ring, np.full(segments, z)]))
                else:
                    pts.append([0.0, 0.0, z])
            out.append(np.array(pts))
        elif p["type"] == "sphere":
            out.append(_sample_sphere(p, p["radius"] / 3, None))
        else:
            raise InvalidScript(f"unknown shape type {p['type']!r}")
    return out
