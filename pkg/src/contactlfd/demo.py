"""In-memory demonstration: per-frame labeled point clouds plus object models."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UnknownObject
from .geometry import PointCloud

HAND = "hand"


@dataclass
class Frame:
    index: int
    clouds: dict = field(default_factory=dict)
    hand: Optional[PointCloud] = None

    def get(self, name: str) -> Optional[PointCloud]:
        if name == HAND:
            return self.hand
        return self.clouds.get(name)


@dataclass
class DemoMeta:
    frame_rate: float
    objects: list
    symmetry: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    model_eps: dict = field(default_factory=dict)
    phantom: list = field(default_factory=list)

    def __post_init__(self):
        if not self.frame_rate > 0:
            raise ValueError("frame_rate must be > 0")


@dataclass
class Demonstration:
    meta: DemoMeta
    frames: list
    models: dict = field(default_factory=dict)
    model_parts: dict = field(default_factory=dict)

    @property
    def objects(self) -> list:
        return list(self.meta.objects)

    @property
    def frame_rate(self) -> float:
        return self.meta.frame_rate

    def timestamp(self, index: int) -> float:
        return index / self.meta.frame_rate

    def check_name(self, name: str):
        if name != HAND and name not in self.meta.objects:
            raise UnknownObject(f"{name!r} is not an object of this demonstration")

    def symmetry_axis(self, name: str):
        axis = self.meta.symmetry.get(name)
        return None if axis is None else np.asarray(axis, dtype=float)

    def __len__(self):
        return len(self.frames)
