"""
Border following, polygon simplification and shape measures on binary rasters.
"""

from typing import List, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from platelab.exceptions import DegenerateGeometryError
from platelab.imaging.buffer import Contour, ImageBuffer, PointsLike, as_points

# Moore neighbourhood in clockwise order (image y axis points down), starting west.
_NEIGHBOURS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_DIRECTION_INDEX = {offset: index for index, offset in enumerate(_NEIGHBOURS)}
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def connected_components(binary: ImageBuffer) -> Tuple[np.ndarray, int]:
    """
    Labels 8-connected foreground components.

    :param binary: (ImageBuffer) 1-channel image; any non-zero pixel is foreground.
    :return: (tuple) Label array (0 = background) and component count.
    """

    binary.require_channels(1, "connected_components")
    labels, count = ndimage.label(binary.pixels > 0, structure=_EIGHT_CONNECTED)

    return labels, int(count)


def _trace_boundary(mask: np.ndarray, start: Tuple[int, int]) -> List[Tuple[int, int]]:
    """
    Moore-neighbour tracing of the outer boundary of the component containing ``start``.

    ``start`` must be the first foreground pixel of the component in raster order, so its west
    neighbour is background. Tracing stops when the first move is about to be repeated.
    """

    height, width = mask.shape

    def foreground(row: int, col: int) -> bool:
        return 0 <= row < height and 0 <= col < width and bool(mask[row, col])

    boundary = [start]
    current = start
    back = 0
    first_move = None
    limit = 4 * int(mask.sum()) + 8

    for _ in range(limit):
        for step in range(1, 9):
            direction = (back + step) % 8
            d_row, d_col = _NEIGHBOURS[direction]
            candidate = (current[0] + d_row, current[1] + d_col)
            if foreground(*candidate):
                break
        else:
            return boundary

        prev_row, prev_col = _NEIGHBOURS[(back + step - 1) % 8]
        previous = (current[0] + prev_row, current[1] + prev_col)

        if first_move is None:
            first_move = candidate
        elif current == start and candidate == first_move:
            break

        back = _DIRECTION_INDEX[(previous[0] - candidate[0], previous[1] - candidate[1])]
        current = candidate
        boundary.append(current)

    if len(boundary) > 1 and boundary[-1] == start:
        boundary.pop()

    return boundary


def find_contours(binary: ImageBuffer) -> List[Contour]:
    """
    Outer boundaries of the 8-connected foreground components, in raster order of their first pixel.

    Components whose boundary has fewer than three distinct points (single pixels, pairs) are skipped.

    :param binary: (ImageBuffer) 1-channel image.
    :return: (list) Contours with (x, y) pixel-centre coordinates.
    """

    labels, count = connected_components(binary)
    if count == 0:
        return []

    contours = []
    slices = ndimage.find_objects(labels)
    for index, window in enumerate(slices, start=1):
        mask = labels[window] == index
        rows, cols = np.nonzero(mask)
        first = int(np.argmin(rows * mask.shape[1] + cols))
        points = _trace_boundary(mask, (int(rows[first]), int(cols[first])))
        if len(set(points)) < 3:
            continue
        offset_row, offset_col = window[0].start, window[1].start
        xy = np.array([(col + offset_col, row + offset_row) for row, col in points], dtype=np.float64)
        contours.append(Contour(xy))

    order = sorted(range(len(contours)), key=lambda i: (contours[i].points[0][1], contours[i].points[0][0]))

    return [contours[i] for i in order]


def _segment_distances(points: np.ndarray, start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """
    Euclidean distance of each point to the segment start-end.
    """

    segment = end - start
    length_sq = float(segment @ segment)
    if length_sq == 0.0:
        return np.hypot(*(points - start).T)
    t = np.clip(((points - start) @ segment) / length_sq, 0.0, 1.0)
    projection = start + t[:, None] * segment

    return np.hypot(*(points - projection).T)


def _douglas_peucker(points: np.ndarray, epsilon: float) -> List[int]:
    """
    Indices kept by Douglas-Peucker on an open polyline; both endpoints are always kept.
    """

    keep = np.zeros(len(points), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(points) - 1)]
    while stack:
        first, last = stack.pop()
        if last - first < 2:
            continue
        distances = _segment_distances(points[first + 1:last], points[first], points[last])
        worst = int(np.argmax(distances))
        if distances[worst] > epsilon:
            split = first + 1 + worst
            keep[split] = True
            stack.append((first, split))
            stack.append((split, last))

    return list(np.nonzero(keep)[0])


def approx_poly(contour: Contour, epsilon: float) -> Contour:
    """
    Douglas-Peucker simplification of a closed contour.

    The ring is cut at its first point and the point farthest from it, both halves are simplified,
    and a final pass drops kept vertices whose whole span stays within epsilon of the chord joining
    their neighbours. No dropped point deviates more than epsilon from the simplified polygon.

    :param contour: (Contour) Closed contour.
    :param epsilon: (float) Maximum deviation, > 0.
    :return: (Contour) Simplified contour with at least 3 vertices.
    """

    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")

    points = contour.points
    count = len(points)
    if count <= 3:
        return Contour(points.copy())

    far = int(np.argmax(np.hypot(*(points - points[0]).T)))
    if far == 0:
        return Contour(points[:3].copy())

    first_half = _douglas_peucker(points[:far + 1], epsilon)
    ring = np.vstack([points[far:], points[:1]])
    second_half = [far + i for i in _douglas_peucker(ring, epsilon)][1:-1]
    kept = first_half + second_half

    changed = True
    while changed and len(kept) > 3:
        changed = False
        for position in range(len(kept)):
            before = kept[position - 1]
            after = kept[(position + 1) % len(kept)]
            span = _ring_span(before, after, count)
            if np.all(_segment_distances(points[span], points[before], points[after]) <= epsilon):
                del kept[position]
                changed = True
                break

    return Contour(points[kept].copy())


def _ring_span(first: int, last: int, count: int) -> np.ndarray:
    if last > first:
        return np.arange(first + 1, last)
    return np.concatenate([np.arange(first + 1, count), np.arange(0, last)]).astype(int)


def polygon_area(points: PointsLike) -> float:
    """
    Signed shoelace area; positive for clockwise order in image coordinates.
    """

    pts = as_points(points)
    x, y = pts[:, 0], pts[:, 1]

    return float((np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def convex_hull(points: PointsLike) -> np.ndarray:
    """
    Vertices of the convex hull in counter-clockwise order of scipy's Qhull output.

    :param points: (array-like) At least 3 non-collinear points.
    :return: (np.ndarray) Hull vertices of shape (K, 2).
    """

    pts = as_points(points)
    try:
        hull = ConvexHull(pts)
    except (QhullError, ValueError) as err:
        raise DegenerateGeometryError("Convex hull of a degenerate point set") from err

    return pts[hull.vertices]


def is_convex(points: PointsLike) -> bool:
    """
    True if the closed polygon turns consistently in one direction and is not degenerate.
    """

    pts = as_points(points)
    edges = np.roll(pts, -1, axis=0) - pts
    turns = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]

    return bool(np.all(turns > 0) or np.all(turns < 0))


def solidity(contour: Contour) -> float:
    """
    Polygon area over convex-hull area.

    :param contour: (Contour) Contour with non-zero area.
    :return: (float) Ratio in (0, 1].
    """

    area = contour.area
    if area <= 0.0:
        raise DegenerateGeometryError("Solidity is undefined for a zero-area contour")

    hull_area = abs(polygon_area(convex_hull(contour.points)))

    return float(min(1.0, area / hull_area))


def min_area_rect(points: PointsLike) -> np.ndarray:
    """
    Minimum-area enclosing rectangle by rotating calipers over the hull edges.

    :param points: (array-like) Points of shape (N, 2).
    :return: (np.ndarray) Rectangle corners of shape (4, 2), in boundary order.
    """

    hull = convex_hull(points)
    edges = np.roll(hull, -1, axis=0) - hull
    angles = np.unique(np.mod(np.arctan2(edges[:, 1], edges[:, 0]), np.pi / 2))

    best = None
    for angle in angles:
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        rotation = np.array([[cos_a, sin_a], [-sin_a, cos_a]])
        rotated = hull @ rotation.T
        lo, hi = rotated.min(axis=0), rotated.max(axis=0)
        area = float(np.prod(hi - lo))
        if best is None or area < best[0]:
            corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
            best = (area, corners @ rotation)

    return best[1]
