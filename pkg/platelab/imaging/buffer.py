"""
Raster and geometry containers shared by every processing stage.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from platelab.exceptions import DegenerateGeometryError, ImageFormatError


class ImageBuffer:
    """
    Owned 8-bit raster, either gray (H x W) or RGB (H x W x 3).

    The pixel array is copied on construction unless the caller hands over ownership with
    ``copy=False``; stages never mutate a buffer they did not create.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray, copy: bool = True):
        """
        :param pixels: (np.ndarray) uint8 array of shape (H, W), (H, W, 1) or (H, W, 3).
        :param copy: (bool) Whether to copy the array; pass False only for freshly allocated arrays.
        """

        pixels = np.asarray(pixels)
        if pixels.dtype != np.uint8:
            raise ImageFormatError(f"ImageBuffer requires uint8 samples, got {pixels.dtype}")
        if pixels.ndim == 3 and pixels.shape[2] == 1:
            pixels = pixels[:, :, 0]
        if pixels.ndim not in (2, 3) or (pixels.ndim == 3 and pixels.shape[2] != 3):
            raise ImageFormatError(f"ImageBuffer requires 1 or 3 channels, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ImageFormatError(f"ImageBuffer must be at least 1x1, got shape {pixels.shape}")

        self.pixels = np.array(pixels, copy=True, order="C") if copy else np.ascontiguousarray(pixels)

    @classmethod
    def zeros(cls, width: int, height: int, channels: int = 1) -> "ImageBuffer":
        shape = (height, width) if channels == 1 else (height, width, channels)
        return cls(np.zeros(shape, dtype=np.uint8), copy=False)

    @classmethod
    def from_float(cls, values: np.ndarray) -> "ImageBuffer":
        """
        Rounds and clips floating point samples into a new buffer.

        :param values: (np.ndarray) Float array in the 0-255 range.
        :return: (ImageBuffer) New raster.
        """

        return cls(np.clip(np.rint(values), 0, 255).astype(np.uint8), copy=False)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def data(self) -> bytes:
        """
        Row-major samples; length is width * height * channels.
        """

        return self.pixels.tobytes()

    @property
    def area(self) -> int:
        return self.width * self.height

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels)

    def digest(self) -> str:
        """
        SHA-1 over shape and samples, used to recognise a frame independently of its file name.
        """

        hasher = hashlib.sha1()
        hasher.update(repr(self.pixels.shape).encode("ascii"))
        hasher.update(self.pixels.tobytes())

        return hasher.hexdigest()

    def require_channels(self, channels: int, operation: str) -> None:
        if self.channels != channels:
            raise ImageFormatError(f"{operation} expects a {channels}-channel image, got {self.channels}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


class Point2(NamedTuple):
    """
    Sub-pixel image coordinate.
    """

    x: float
    y: float


PointsLike = Union[np.ndarray, Sequence[Sequence[float]], Sequence[Point2]]


def as_points(points: PointsLike) -> np.ndarray:
    """
    Converts any point sequence into a finite float (N, 2) array.

    :param points: (array-like) Points as rows of (x, y).
    :return: (np.ndarray) Float64 array of shape (N, 2).
    """

    array = np.asarray(points, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError(f"Expected an (N, 2) point array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError("Point coordinates must be finite")

    return array


@dataclass(frozen=True)
class Contour:
    """
    Closed boundary; the last point connects back to the first.
    """

    points: np.ndarray

    def __post_init__(self):
        points = as_points(self.points)
        if len(points) < 3:
            raise ValueError(f"A contour needs at least 3 points, got {len(points)}")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def area(self) -> float:
        """
        Unsigned shoelace area.
        """

        x, y = self.points[:, 0], self.points[:, 1]
        return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)

    @property
    def perimeter(self) -> float:
        deltas = np.roll(self.points, -1, axis=0) - self.points
        return float(np.hypot(deltas[:, 0], deltas[:, 1]).sum())


@dataclass(frozen=True)
class Homography:
    """
    Projective 3x3 transform normalised so that m[2][2] == 1.
    """

    m: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.m, dtype=np.float64)
        if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
            raise DegenerateGeometryError(f"Homography must be a finite 3x3 matrix, got shape {matrix.shape}")
        if abs(matrix[2, 2]) < 1e-12:
            raise DegenerateGeometryError("Homography cannot be normalised: m[2][2] is zero")
        matrix = matrix / matrix[2, 2]
        if abs(np.linalg.det(matrix)) <= 1e-9:
            raise DegenerateGeometryError("Homography is not invertible")
        matrix.setflags(write=False)
        object.__setattr__(self, "m", matrix)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, dx: float, dy: float) -> "Homography":
        return cls(np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]]))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def compose(self, other: "Homography") -> "Homography":
        """
        Transform applying ``other`` first, then ``self``.
        """

        return Homography(self.m @ other.m)

    def apply(self, points: PointsLike) -> np.ndarray:
        """
        Maps points through the transform.

        :param points: (array-like) Points of shape (N, 2).
        :return: (np.ndarray) Mapped points of shape (N, 2).
        """

        pts = as_points(points)
        homogeneous = np.column_stack([pts, np.ones(len(pts))]) @ self.m.T
        w = homogeneous[:, 2:3]
        if np.any(np.abs(w) < 1e-12):
            raise DegenerateGeometryError("Point maps to infinity under the homography")

        return homogeneous[:, :2] / w

    def to_list(self) -> list:
        return [[float(v) for v in row] for row in self.m]
