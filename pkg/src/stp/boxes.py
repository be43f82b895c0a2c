"""Axis-aligned boxes in pixel coordinates, ``(x, y, w, h)`` with top-left origin."""
from __future__ import annotations

from typing import NamedTuple, Tuple


class Box(NamedTuple):
    x: float
    y: float
    w: float
    h: float

    @property
    def center(self) -> Tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    @property
    def pixel_center(self) -> Tuple[int, int]:
        """Integer pixel the tracker treats as the object center."""
        return int(self.x) + int(self.w) // 2, int(self.y) + int(self.h) // 2

    @classmethod
    def around(cls, center: Tuple[int, int], w: int, h: int) -> "Box":
        """Box of size ``w x h`` whose pixel center is ``center``."""
        return cls(int(center[0]) - int(w) // 2, int(center[1]) - int(h) // 2, int(w), int(h))

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h
