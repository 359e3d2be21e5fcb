"""
Non-local means denoising.
"""

import numpy as np
from scipy import ndimage

from platelab.imaging.buffer import ImageBuffer


def denoise(img: ImageBuffer, patch: int = 7, search: int = 21, h: float = 10.0) -> ImageBuffer:
    """
    Simplified non-local means.

    Every pixel becomes a weighted mean of the pixels in its search window, weighted by
    exp(-d / h^2) where d is the mean squared difference between the patches around the two pixels
    (averaged over channels). The search loop is over window offsets, so each iteration is a whole-image
    array operation.

    :param img: (ImageBuffer) Gray or RGB image.
    :param patch: (int) Odd patch side.
    :param search: (int) Odd search window side.
    :param h: (float) Filtering strength on the 8-bit scale.
    :return: (ImageBuffer) Denoised image with the same shape.
    """

    if patch % 2 == 0 or search % 2 == 0 or patch < 1 or search < 1:
        raise ValueError(f"patch and search must be odd and positive, got {patch} and {search}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")

    values = img.pixels.astype(np.float32)
    if values.ndim == 2:
        values = values[:, :, None]
    height, width, _ = values.shape
    radius = search // 2
    padded = np.pad(values, ((radius, radius), (radius, radius), (0, 0)), mode="symmetric")

    accumulated = np.zeros_like(values)
    total_weight = np.zeros((height, width), dtype=np.float32)
    inv_h2 = np.float32(1.0 / (h * h))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = padded[radius + dy:radius + dy + height, radius + dx:radius + dx + width]
            distance = ((values - shifted) ** 2).mean(axis=2)
            patch_distance = ndimage.uniform_filter(distance, size=patch, mode="mirror")
            weight = np.exp(-np.maximum(patch_distance, 0.0) * inv_h2)
            accumulated += weight[:, :, None] * shifted
            total_weight += weight

    result = accumulated / total_weight[:, :, None]
    if img.channels == 1:
        result = result[:, :, 0]

    return ImageBuffer.from_float(result)
