"""
Gaussian smoothing, Sobel gradients and the Canny edge detector.
"""

from typing import Tuple

import numpy as np
from scipy import ndimage

from platelab.imaging.buffer import ImageBuffer

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


def gaussian_kernel(size: int = 5, sigma: float = 1.4) -> np.ndarray:
    """
    Normalised 2-D Gaussian kernel.

    :param size: (int) Odd side length.
    :param sigma: (float) Standard deviation in pixels.
    :return: (np.ndarray) Kernel of shape (size, size) summing to 1.
    """

    if size < 1 or size % 2 == 0:
        raise ValueError(f"Kernel size must be odd and positive, got {size}")

    axis = np.arange(size) - size // 2
    xx, yy = np.meshgrid(axis, axis)
    kernel = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))

    return kernel / kernel.sum()


def gaussian_blur(values: np.ndarray, size: int = 5, sigma: float = 1.4) -> np.ndarray:
    """
    Convolves a float image with a Gaussian kernel, replicating border pixels.
    """

    return ndimage.convolve(np.asarray(values, dtype=np.float64), gaussian_kernel(size, sigma), mode="nearest")


def sobel_gradients(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Horizontal and vertical Sobel responses of a float image.
    """

    gx = ndimage.correlate(values, SOBEL_X, mode="nearest")
    gy = ndimage.correlate(values, SOBEL_Y, mode="nearest")

    return gx, gy


def _non_max_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """
    Keeps pixels that are maxima along the quantised gradient direction.

    Ties with the neighbour ahead are kept and ties with the neighbour behind are dropped, so a plateau
    two pixels wide yields a single-pixel line.
    """

    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(magnitude, 1, mode="constant")
    height, width = magnitude.shape

    def shifted(dy: int, dx: int) -> np.ndarray:
        return padded[1 + dy:1 + dy + height, 1 + dx:1 + dx + width]

    # Direction bins: 0 horizontal gradient, 45 diagonal, 90 vertical, 135 anti-diagonal.
    horizontal = (angle < 22.5) | (angle >= 157.5)
    diagonal = (angle >= 22.5) & (angle < 67.5)
    vertical = (angle >= 67.5) & (angle < 112.5)
    anti = (angle >= 112.5) & (angle < 157.5)

    behind = np.select([horizontal, diagonal, vertical, anti],
                       [shifted(0, -1), shifted(-1, -1), shifted(-1, 0), shifted(-1, 1)])
    ahead = np.select([horizontal, diagonal, vertical, anti],
                      [shifted(0, 1), shifted(1, 1), shifted(1, 0), shifted(1, -1)])

    keep = (magnitude > behind) & (magnitude >= ahead)

    return np.where(keep, magnitude, 0.0)


def canny(img: ImageBuffer, low: float = 50.0, high: float = 150.0, sigma: float = 1.4) -> ImageBuffer:
    """
    Canny edge detector: 5x5 Gaussian smoothing, Sobel gradients, non-maximum suppression and
    double-threshold hysteresis over 8-connected edge chains.

    Thresholds apply to the L2 magnitude of the raw Sobel response.

    :param img: (ImageBuffer) 1-channel image.
    :param low: (float) Weak edge threshold.
    :param high: (float) Strong edge threshold.
    :param sigma: (float) Gaussian standard deviation.
    :return: (ImageBuffer) Binary edge map with values in {0, 255}.
    """

    img.require_channels(1, "canny")
    if not 0 < low < high <= 255:
        raise ValueError(f"Canny thresholds must satisfy 0 < low < high <= 255, got low={low}, high={high}")

    smoothed = gaussian_blur(img.as_float(), 5, sigma)
    gx, gy = sobel_gradients(smoothed)
    magnitude = np.hypot(gx, gy)
    thin = _non_max_suppression(magnitude, gx, gy)

    weak = thin >= low
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return ImageBuffer(np.zeros_like(img.pixels), copy=False)

    strong_labels = np.unique(labels[thin >= high])
    strong_labels = strong_labels[strong_labels > 0]
    edges = np.isin(labels, strong_labels)

    return ImageBuffer(np.where(edges, 255, 0).astype(np.uint8), copy=False)
