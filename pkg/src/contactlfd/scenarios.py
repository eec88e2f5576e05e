"""Built-in scenario scripts: the five-step dishwash, a wrist-flip pick and random scripted demos.

All poses are in a world frame whose origin is the robot base; the counter
top is the plane z = 0.
"""
from __future__ import annotations

import copy

import numpy as np

from .generator import HandSpec, ObjectSpec, ScenarioSpec
from .geometry import Pose

BOWL = {"type": "lathe", "profile": [[0.0, 0.0], [0.04, 0.0], [0.075, 0.06]]}
BIG_BOWL = {"type": "lathe", "profile": [[0.0, 0.0], [0.045, 0.0], [0.085, 0.065]]}
SINK = {"type": "parts", "parts": [
    {"type": "box", "min": [-0.18, -0.18, 0.0], "max": [0.18, 0.18, 0.01]},
    {"type": "box", "min": [-0.19, -0.19, 0.0], "max": [-0.18, 0.19, 0.10]},
    {"type": "box", "min": [0.18, -0.19, 0.0], "max": [0.19, 0.19, 0.10]},
    {"type": "box", "min": [-0.18, -0.19, 0.0], "max": [0.18, -0.18, 0.10]},
    {"type": "box", "min": [-0.18, 0.18, 0.0], "max": [0.18, 0.19, 0.10]},
]}
FAUCET = {"type": "parts", "parts": [
    {"type": "box", "min": [-0.02, -0.02, 0.0], "max": [0.02, 0.02, 0.42]},
    {"type": "box", "min": [-0.21, -0.015, 0.39], "max": [-0.02, 0.015, 0.42]},
]}
LEVER = {"type": "box", "min": [-0.008, 0.0, 0.0], "max": [0.008, 0.08, 0.012]}
WATER = {"type": "cylinder", "radius": 0.012, "z0": -0.378, "z1": 0.0}
COUNTER = {"type": "box", "min": [0.15, -0.6, -0.04], "max": [0.95, 0.6, 0.0]}

WATER_OFFSET = (-0.20, 0.0, 0.39)
LEVER_OFFSET = (0.0, 0.0, 0.423)
LEVER_TIP = [0.0, 0.072, 0.012]
BOWL_RIM = [0.0, 0.075, 0.06]
DOWN = [0.0, 0.0, -1.0]

SINK_AT = (0.45, -0.22, 0.0)
FAUCET_AT = (0.66, -0.22, 0.0)
BOWL_AT = (0.40, 0.25, 0.0)


def _t(xyz) -> dict:
    return {"translation": list(map(float, xyz))}


def dishwash_spec(seed: int = 0, noise: float = 0.0005) -> ScenarioSpec:
    """Faucet on, pick the bowl, rinse it under the water, place it in the sink, faucet off."""
    lever_at = np.add(FAUCET_AT, LEVER_OFFSET)
    objects = {
        "sink": ObjectSpec(SINK, Pose.from_translation(SINK_AT), spacing=0.008),
        "faucet": ObjectSpec(FAUCET, Pose.from_translation(FAUCET_AT), spacing=0.005),
        "lever": ObjectSpec(LEVER, Pose.from_translation(lever_at), spacing=0.003),
        "water": ObjectSpec(WATER, Pose.from_translation(np.add(FAUCET_AT, WATER_OFFSET)), [0, 0, 1],
                            phantom=True, spacing=0.004, present=False),
        "bowl": ObjectSpec(BOWL, Pose.from_translation(BOWL_AT), [0, 0, 1], spacing=0.004),
    }
    rinse = (0.46, -0.22, 0.06)
    above_place = (0.37, -0.14, 0.06)
    events = [
        {"type": "touch", "object": "lever", "frame": 20, "location": LEVER_TIP, "approach": DOWN},
        {"type": "move", "object": "lever", "start": 25, "end": 45, "by": {"axis": [0, 0, 1], "angle_deg": 65}},
        {"type": "release", "object": "lever", "frame": 50},
        {"type": "touch", "object": "bowl", "frame": 80, "location": BOWL_RIM, "approach": DOWN},
        {"type": "move", "object": "bowl", "start": 85, "end": 100, "to": _t((0.40, 0.25, 0.15))},
        {"type": "move", "object": "bowl", "start": 100, "end": 125, "to": _t((0.46, -0.22, 0.15))},
        {"type": "move", "object": "bowl", "start": 125, "end": 135, "to": _t(rinse)},
        {"type": "move", "object": "bowl", "start": 140, "end": 150, "by": {"axis": [1, 0, 0], "angle_deg": 15}},
        {"type": "move", "object": "bowl", "start": 150, "end": 165, "by": {"axis": [1, 0, 0], "angle_deg": -30}},
        {"type": "move", "object": "bowl", "start": 165, "end": 170, "to": _t(rinse)},
        {"type": "move", "object": "bowl", "start": 175, "end": 200, "to": _t(above_place)},
        {"type": "move", "object": "bowl", "start": 200, "end": 215, "to": _t((0.37, -0.14, 0.0105))},
        {"type": "release", "object": "bowl", "frame": 222},
        {"type": "touch", "object": "lever", "frame": 255, "location": LEVER_TIP, "approach": DOWN},
        {"type": "move", "object": "lever", "start": 260, "end": 280, "by": {"axis": [0, 0, 1], "angle_deg": -65}},
        {"type": "release", "object": "lever", "frame": 285},
    ]
    rules = [{"type": "faucet", "lever": "lever", "base": "faucet", "water": "water",
              "water_offset": _t(WATER_OFFSET), "on_angle_deg": 30.0}]
    steps = [
        {"name": "F-On", "start": 20, "end": 50},
        {"name": "Pick", "start": 80, "end": 100},
        {"name": "Rinse", "start": 100, "end": 172},
        {"name": "Place", "start": 172, "end": 222},
        {"name": "F-Off", "start": 255, "end": 285},
    ]
    return ScenarioSpec(objects, events, 310, 30.0, noise, seed, HandSpec(), rules, steps)


def _home_sink() -> dict:
    sink = copy.deepcopy(SINK)
    sink["parts"][0] = {"type": "box", "min": [-0.20, -0.18, 0.0], "max": [0.20, 0.18, 0.01]}
    sink["parts"][1] = {"type": "box", "min": [-0.21, -0.19, 0.0], "max": [-0.20, 0.19, 0.10]}
    sink["parts"][2] = {"type": "box", "min": [0.20, -0.19, 0.0], "max": [0.21, 0.19, 0.10]}
    sink["parts"][3] = {"type": "box", "min": [-0.20, -0.19, 0.0], "max": [0.20, -0.18, 0.10]}
    sink["parts"][4] = {"type": "box", "min": [-0.20, 0.18, 0.0], "max": [0.20, 0.19, 0.10]}
    return sink


def dishwash_scene(displacement: float = 0.0, swap_bowl: bool = False, seed: int = 0,
                   remove: tuple = (), tight_sink: bool = False, home: bool = False) -> dict:
    """Execution scene description (shapes plus poses) for the dishwash task.

    Sink+faucet+lever move together by one random planar offset, the bowl by
    another, each of norm at most ``displacement``. ``home`` is a second
    kitchen: counter 3 cm higher, a wider sink and the lever parked 15° off.
    The scene's ``condition`` labels object, location and environment as
    seen (S) or unseen (U) relative to the demonstration.
    """
    rng = np.random.default_rng(seed)

    def offset():
        if displacement <= 0:
            return np.zeros(3)
        ang = rng.uniform(0, 2 * np.pi)
        r = displacement * np.sqrt(rng.uniform(0, 1))
        return np.array([r * np.cos(ang), r * np.sin(ang), 0.0])

    d_sink = offset()
    d_bowl = offset()
    # keep the bowl clear of the sink walls after independent displacement
    for _ in range(100):
        bowl_xy = np.add(BOWL_AT, d_bowl)
        sink_xy = np.add(SINK_AT, d_sink)
        if np.max(np.abs(bowl_xy[:2] - sink_xy[:2])) > 0.19 + 0.09 + 0.02:
            break
        d_bowl = offset()
    sink = _home_sink() if home else copy.deepcopy(SINK)
    if tight_sink:
        sink["parts"][2] = {"type": "box", "min": [-0.09, -0.19, 0.0], "max": [-0.08, 0.19, 0.10]}
        sink["parts"][4] = {"type": "box", "min": [-0.18, -0.10, 0.0], "max": [0.18, -0.09, 0.10]}
    lift = np.array([0.0, 0.0, 0.03 if home else 0.0])
    d_sink, d_bowl = d_sink + lift, d_bowl + lift
    lever_rot = Pose.from_axis_angle([0, 0, 1], np.radians(15.0 if home else 0.0))
    objects = {
        "counter": {"shape": COUNTER, "pose": Pose.from_translation(lift).to_dict(), "fixture": True},
        "sink": {"shape": sink, "pose": Pose.from_translation(np.add(SINK_AT, d_sink)).to_dict()},
        "faucet": {"shape": FAUCET, "pose": Pose.from_translation(np.add(FAUCET_AT, d_sink)).to_dict()},
        "lever": {"shape": LEVER,
                  "pose": (Pose.from_translation(np.add(FAUCET_AT, d_sink) + LEVER_OFFSET) @ lever_rot).to_dict()},
        "water": {"shape": WATER, "pose": Pose.from_translation(np.add(FAUCET_AT, d_sink) + WATER_OFFSET).to_dict(),
                  "present": False, "phantom": True, "symmetry": [0, 0, 1]},
        "bowl": {"shape": BIG_BOWL if swap_bowl else BOWL, "pose": Pose.from_translation(np.add(BOWL_AT, d_bowl)).to_dict(),
                 "symmetry": [0, 0, 1]},
    }
    for name in remove:
        objects.pop(name, None)
    rules = [r for r in [{"type": "faucet", "lever": "lever", "base": "faucet", "water": "water",
                          "water_offset": _t(WATER_OFFSET), "on_angle_deg": 30.0}]
             if all(r[k] in objects for k in ("lever", "base", "water"))]
    condition = {"obj": "U" if swap_bowl else "S", "loc": "U" if displacement > 0 or home else "S",
                 "env": "U" if home else "S"}
    return {"format": "contactlfd-scene", "version": 1, "objects": objects, "rules": rules,
            "sample_spacing": 0.004, "seed": int(seed), "condition": condition}


FLIP_BOWL_AT = (0.80, 0.0, 0.0)
FAR_RIM = [0.075, 0.0, 0.06]


def wrist_flip_spec(seed: int = 0, noise: float = 0.0005) -> ScenarioSpec:
    """Pick a bowl near the edge of the workspace by its far rim, lift it and put it down."""
    objects = {
        "bowl": ObjectSpec(BOWL, Pose.from_translation(FLIP_BOWL_AT), [0, 0, 1], spacing=0.004),
        "tray": ObjectSpec({"type": "box", "min": [-0.12, -0.12, -0.01], "max": [0.12, 0.12, 0.0]},
                           Pose.from_translation(FLIP_BOWL_AT), spacing=0.006),
    }
    events = [
        {"type": "touch", "object": "bowl", "frame": 20, "location": FAR_RIM, "approach": DOWN},
        {"type": "move", "object": "bowl", "start": 25, "end": 45, "to": _t(np.add(FLIP_BOWL_AT, (0, 0, 0.08)))},
        {"type": "move", "object": "bowl", "start": 50, "end": 70, "to": _t(np.add(FLIP_BOWL_AT, (0, 0, 0.0005)))},
        {"type": "release", "object": "bowl", "frame": 75},
    ]
    return ScenarioSpec(objects, events, 90, 30.0, noise, seed, HandSpec(), [], [{"name": "Pick", "start": 20, "end": 75}])


def wrist_flip_scene(seed: int = 0, jitter: float = 0.01) -> dict:
    rng = np.random.default_rng(seed)
    d = np.array([*rng.uniform(-jitter, jitter, 2), 0.0])
    at = np.add(FLIP_BOWL_AT, d)
    return {"format": "contactlfd-scene", "version": 1, "seed": int(seed), "sample_spacing": 0.004, "rules": [],
            "objects": {
                "counter": {"shape": COUNTER, "pose": Pose.identity().to_dict(), "fixture": True},
                "tray": {"shape": {"type": "box", "min": [-0.12, -0.12, -0.01], "max": [0.12, 0.12, 0.0]},
                         "pose": Pose.from_translation(at).to_dict()},
                "bowl": {"shape": BOWL, "pose": Pose.from_translation(at).to_dict(), "symmetry": [0, 0, 1]},
            }}


def random_spec(seed: int) -> ScenarioSpec:
    """1-3 boxes or cylinders in a row; the hand picks some of them up and puts them back down."""
    rng = np.random.default_rng(seed)
    n_obj = int(rng.integers(1, 4))
    n_frames = int(rng.integers(100, 601))
    objects = {}
    for i in range(n_obj):
        at = (0.35 + 0.05 * rng.uniform(-1, 1), -0.3 + 0.3 * i, 0.0)
        if rng.uniform() < 0.5:
            hx, hy, h = rng.uniform(0.025, 0.05), rng.uniform(0.025, 0.05), rng.uniform(0.04, 0.1)
            shape = {"type": "box", "min": [-hx, -hy, 0.0], "max": [hx, hy, h]}
            sym = None
        else:
            h = rng.uniform(0.04, 0.1)
            shape = {"type": "cylinder", "radius": float(rng.uniform(0.025, 0.05)), "z0": 0.0, "z1": h}
            sym = [0, 0, 1]
        objects[f"obj{i}"] = ObjectSpec(shape, Pose.from_translation(at), sym, spacing=0.004)
    hand = HandSpec()
    # touches need lead-in and retreat room; each occupies [s - lead, e + lead]
    n_touch = min(int(rng.integers(1, 4)), (n_frames - 4) // 40)
    min_len = 12
    slot = (n_frames - 4) // n_touch
    events = []
    t0 = 2
    for k in range(n_touch):
        lo = t0 + hand.lead + 1
        length = int(rng.integers(min_len, slot - 2 * hand.lead - 1))
        s = int(rng.integers(lo, t0 + slot - hand.lead - length))
        e = s + length
        name = f"obj{int(rng.integers(0, n_obj))}"
        shape = objects[name].shape
        top = shape["z1"] if shape["type"] == "cylinder" else shape["max"][2]
        loc = [0.0, 0.0, float(top)]
        events.append({"type": "touch", "object": name, "frame": s, "location": loc, "approach": DOWN})
        pose0 = objects[name].pose
        mid = (s + e) // 2
        if mid - s >= 4 and e - mid >= 4:
            up = np.add(pose0.translation, (0.0, 0.0, 0.08))
            events.append({"type": "move", "object": name, "start": s + 2, "end": mid - 1, "to": _t(up)})
            events.append({"type": "move", "object": name, "start": mid + 1, "end": e - 2,
                           "to": _t(np.add(pose0.translation, (0.0, 0.0, 0.0005)))})
        events.append({"type": "release", "object": name, "frame": e})
        t0 += slot
    return ScenarioSpec(objects, events, n_frames, 30.0, 0.0005, seed, hand)
