"""
Plate quadrilateral: corner ordering, edge lengths and the foreshortening/tilt measure.
"""

import math
from dataclasses import dataclass

import numpy as np

from platelab.exceptions import DegenerateGeometryError
from platelab.imaging.buffer import PointsLike, as_points
from platelab.imaging.contours import polygon_area


def order_corners(points: PointsLike) -> np.ndarray:
    """
    Orders four points as TL, TR, BR, BL.

    TL has the smallest x + y, BR the largest, TR the largest x - y and BL the smallest. When these picks
    collide (a square rotated by 45 degrees), the points are ordered clockwise by angle around the centroid
    starting from the top-left-most one.

    :param points: (array-like) Four points.
    :return: (np.ndarray) Ordered corners of shape (4, 2).
    """

    pts = as_points(points)
    if len(pts) != 4:
        raise ValueError(f"Expected 4 corner points, got {len(pts)}")

    sums = pts.sum(axis=1)
    diffs = pts[:, 0] - pts[:, 1]
    picks = [int(np.argmin(sums)), int(np.argmax(diffs)), int(np.argmax(sums)), int(np.argmin(diffs))]
    if len(set(picks)) == 4:
        return pts[picks].copy()

    centre = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0])
    clockwise = pts[np.argsort(angles)]
    start = int(np.argmin(clockwise.sum(axis=1)))

    return np.roll(clockwise, -start, axis=0)


@dataclass(frozen=True)
class GeometryMeasure:
    """
    Perspective severity of a plate quadrilateral.

    fr is the top/bottom edge ratio normalised to >= 1, tilt_deg the absolute angle of the top edge
    against the horizontal and side_ratio the left/right edge ratio normalised to >= 1.
    """

    fr: float
    tilt_deg: float
    side_ratio: float = 1.0

    def to_dict(self) -> dict:
        return {"fr": self.fr, "tilt_deg": self.tilt_deg, "side_ratio": self.side_ratio}


@dataclass(frozen=True)
class Quadrilateral:
    """
    Four corners ordered TL, TR, BR, BL.
    """

    corners: np.ndarray

    def __post_init__(self):
        corners = as_points(self.corners)
        if corners.shape != (4, 2):
            raise DegenerateGeometryError(f"A quadrilateral needs 4 corners, got shape {corners.shape}")
        corners.setflags(write=False)
        object.__setattr__(self, "corners", corners)
        if min(self.top_len, self.bottom_len, self.left_len, self.right_len) <= 0:
            raise DegenerateGeometryError("Quadrilateral has a zero-length edge")

    @classmethod
    def from_points(cls, points: PointsLike) -> "Quadrilateral":
        return cls(order_corners(points))

    def _edge(self, a: int, b: int) -> float:
        return float(np.hypot(*(self.corners[b] - self.corners[a])))

    @property
    def top_len(self) -> float:
        return self._edge(0, 1)

    @property
    def right_len(self) -> float:
        return self._edge(1, 2)

    @property
    def bottom_len(self) -> float:
        return self._edge(3, 2)

    @property
    def left_len(self) -> float:
        return self._edge(0, 3)

    @property
    def area(self) -> float:
        return abs(polygon_area(self.corners))

    def to_list(self) -> list:
        return [[float(x), float(y)] for x, y in self.corners]


def calculate_geometry(quad: Quadrilateral) -> GeometryMeasure:
    """
    Foreshortening ratio, tilt and side ratio of a quadrilateral.

    :param quad: (Quadrilateral) Ordered plate corners.
    :return: (GeometryMeasure) Measures; fr and side_ratio are >= 1, tilt_deg is in [0, 90].
    """

    fr = max(quad.top_len, quad.bottom_len) / min(quad.top_len, quad.bottom_len)
    side_ratio = max(quad.left_len, quad.right_len) / min(quad.left_len, quad.right_len)

    d_x, d_y = quad.corners[1] - quad.corners[0]
    tilt = abs(math.degrees(math.atan2(d_y, d_x)))
    if tilt > 90.0:
        tilt = 180.0 - tilt

    return GeometryMeasure(fr=float(fr), tilt_deg=float(tilt), side_ratio=float(side_ratio))

