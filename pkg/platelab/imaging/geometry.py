"""
Four-point homography estimation and perspective warping.
"""

from itertools import combinations
from typing import Tuple

import numpy as np

from platelab.exceptions import DegenerateGeometryError
from platelab.imaging.buffer import Homography, ImageBuffer, PointsLike, as_points


def _normalising_transform(points: np.ndarray) -> np.ndarray:
    """
    Similarity moving the centroid to the origin with mean distance sqrt(2).
    """

    centroid = points.mean(axis=0)
    spread = np.hypot(*(points - centroid).T).mean()
    scale = np.sqrt(2.0) / spread

    return np.array([[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]])


def _check_general_position(points: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.ptp(points, axis=0).max()))
    for a, b, c in combinations(range(4), 3):
        ab, ac = points[b] - points[a], points[c] - points[a]
        if abs(ab[0] * ac[1] - ab[1] * ac[0]) <= 1e-9 * scale * scale:
            raise DegenerateGeometryError(f"Three {name} points are collinear: {points[[a, b, c]].tolist()}")


def estimate_homography(src: PointsLike, dst: PointsLike) -> Homography:
    """
    Exact four-point direct linear transform, solved on normalised coordinates.

    :param src: (array-like) Four source points.
    :param dst: (array-like) Four destination points.
    :return: (Homography) Transform mapping each src point onto its dst point.
    """

    src, dst = as_points(src), as_points(dst)
    if len(src) != 4 or len(dst) != 4:
        raise ValueError(f"estimate_homography needs exactly 4 point pairs, got {len(src)} and {len(dst)}")
    _check_general_position(src, "source")
    _check_general_position(dst, "destination")

    t_src, t_dst = _normalising_transform(src), _normalising_transform(dst)
    src_n = np.column_stack([src, np.ones(4)]) @ t_src.T
    dst_n = np.column_stack([dst, np.ones(4)]) @ t_dst.T

    system = np.zeros((8, 8))
    rhs = np.zeros(8)
    for i in range(4):
        x, y = src_n[i, :2]
        u, v = dst_n[i, :2]
        system[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]
        system[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]
        rhs[2 * i], rhs[2 * i + 1] = u, v

    try:
        solution = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as err:
        raise DegenerateGeometryError("Homography system is singular") from err

    normalised = np.append(solution, 1.0).reshape(3, 3)

    return Homography(np.linalg.inv(t_dst) @ normalised @ t_src)


def sample_bilinear(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinear samples of a (H, W, C) float array at real coordinates.

    :return: (tuple) Sampled values of shape xs.shape + (C,) and a validity mask; invalid samples are 0.
    """

    height, width = values.shape[:2]
    tolerance = 1e-6
    valid = (xs >= -tolerance) & (xs <= width - 1 + tolerance) & (ys >= -tolerance) & (ys <= height - 1 + tolerance)
    xs = np.clip(xs, 0.0, width - 1)
    ys = np.clip(ys, 0.0, height - 1)

    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    wx = (xs - x0)[..., None]
    wy = (ys - y0)[..., None]

    top = values[y0, x0] * (1 - wx) + values[y0, x1] * wx
    bottom = values[y1, x0] * (1 - wx) + values[y1, x1] * wx
    sampled = top * (1 - wy) + bottom * wy

    return np.where(valid[..., None], sampled, 0.0), valid


def warp_perspective(img: ImageBuffer, homography: Homography, out_w: int, out_h: int) -> ImageBuffer:
    """
    Inverse-mapped perspective warp with bilinear interpolation.

    Output pixel (x, y) takes the source sample at H^-1 (x, y); samples outside the source are 0.

    :param img: (ImageBuffer) Source image.
    :param homography: (Homography) Source-to-output transform.
    :param out_w: (int) Output width.
    :param out_h: (int) Output height.
    :return: (ImageBuffer) Warped image with the source channel count.
    """

    if out_w < 1 or out_h < 1:
        raise DegenerateGeometryError(f"Output size must be positive, got {out_w}x{out_h}")

    grid_x, grid_y = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    inverse = homography.inverse().m
    denominator = inverse[2, 0] * grid_x + inverse[2, 1] * grid_y + inverse[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        src_x = (inverse[0, 0] * grid_x + inverse[0, 1] * grid_y + inverse[0, 2]) / denominator
        src_y = (inverse[1, 0] * grid_x + inverse[1, 1] * grid_y + inverse[1, 2]) / denominator
    behind = ~np.isfinite(src_x) | ~np.isfinite(src_y) | (denominator <= 0)
    src_x = np.where(behind, -1.0, src_x)
    src_y = np.where(behind, -1.0, src_y)

    values = img.as_float()
    if values.ndim == 2:
        values = values[:, :, None]
    sampled, _ = sample_bilinear(values, src_x, src_y)
    if img.channels == 1:
        sampled = sampled[:, :, 0]

    return ImageBuffer.from_float(sampled)


def warp_mask(homography: Homography, src_w: int, src_h: int, out_w: int, out_h: int) -> np.ndarray:
    """
    Coverage of each output pixel by the warped source rectangle: 1.0 inside, 0.0 outside.
    """

    ones = ImageBuffer(np.full((src_h, src_w), 255, dtype=np.uint8), copy=False)

    return warp_perspective(ones, homography, out_w, out_h).as_float() / 255.0
