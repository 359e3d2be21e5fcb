"""
Spatial validation of plates against cars, best-plate selection and padded cropping.
"""

import math
from typing import List, Optional, Sequence, Tuple

from platelab.exceptions import DegenerateGeometryError
from platelab.detection.base import Box, Detection
from platelab.imaging.buffer import ImageBuffer


def inside_fraction(plate: Box, car: Box) -> float:
    """
    Share of the plate box area covered by the car box.
    """

    return plate.intersection_area(car) / plate.area


def validate_plates(plates: Sequence[Detection], cars: Sequence[Detection], min_inside: float = 0.9) -> List[Detection]:
    """
    Keeps plates lying inside some car box.

    :param plates: (list) Plate detections.
    :param cars: (list) Car detections.
    :param min_inside: (float) Minimum share of plate area that must intersect a single car box.
    :return: (list) Valid plates in input order.
    """

    return [plate for plate in plates if any(inside_fraction(plate.box, car.box) >= min_inside for car in cars)]


def best_box(plates: Sequence[Detection]) -> Optional[Detection]:
    """
    Highest-confidence plate; the first one wins ties.
    """

    best = None
    for plate in plates:
        if best is None or plate.confidence > best.confidence:
            best = plate

    return best


def padded_region(box: Box, pad: float, width: int, height: int) -> Tuple[int, int, int, int]:
    """
    Integer crop window of a box grown by ``pad`` on every side and clamped to the frame.

    :return: (tuple) x0, y0, x1, y1 with exclusive upper bounds.
    """

    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")

    x0 = max(0, int(math.floor(box.x_min - pad)))
    y0 = max(0, int(math.floor(box.y_min - pad)))
    x1 = min(width, int(math.ceil(box.x_max + pad)))
    y1 = min(height, int(math.ceil(box.y_max + pad)))
    if x1 <= x0 or y1 <= y0:
        raise DegenerateGeometryError(f"Crop of {box.as_tuple()} with pad {pad} is empty inside {width}x{height}")

    return x0, y0, x1, y1


def crop_padded(frame: ImageBuffer, detection: Detection, pad: float = 10) -> ImageBuffer:
    """
    Owned crop of the detection box expanded by ``pad`` pixels, clamped to the frame.

    :param frame: (ImageBuffer) Full frame.
    :param detection: (Detection) Box to crop.
    :param pad: (float) Padding in pixels.
    :return: (ImageBuffer) Cropped ROI.
    """

    x0, y0, x1, y1 = padded_region(detection.box, pad, frame.width, frame.height)

    return ImageBuffer(frame.pixels[y0:y1, x0:x1])
