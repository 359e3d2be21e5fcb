"""
Color-space conversions on 8-bit rasters.

HSV uses the hexcone model with V = max(R, G, B); hue is in degrees [0, 360), saturation in [0, 1]
and value on the 0-255 scale of the input.
"""

from typing import Tuple

import numpy as np

from platelab.imaging.buffer import ImageBuffer

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """
    Per-pixel luma round(0.299 R + 0.587 G + 0.114 B).

    :param img: (ImageBuffer) 3-channel image.
    :return: (ImageBuffer) 1-channel image of the same size.
    """

    img.require_channels(3, "to_grayscale")

    return ImageBuffer.from_float(img.as_float() @ LUMA_WEIGHTS)


def ensure_gray(img: ImageBuffer) -> ImageBuffer:
    """
    Returns a gray view of any buffer, converting RGB input.
    """

    return img if img.channels == 1 else to_grayscale(img)


def gray_to_rgb(img: ImageBuffer) -> ImageBuffer:
    img.require_channels(1, "gray_to_rgb")
    return ImageBuffer(np.repeat(img.pixels[:, :, None], 3, axis=2), copy=False)


def rgb_to_hsv(rgb: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised hexcone RGB to HSV.

    :param rgb: (np.ndarray) Array of shape (..., 3) on the 0-255 scale.
    :return: (tuple) Hue in degrees, saturation in [0, 1], value on the 0-255 scale.
    """

    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    value = rgb.max(axis=-1)
    chroma = value - rgb.min(axis=-1)

    with np.errstate(divide="ignore", invalid="ignore"):
        saturation = np.where(value > 0, chroma / value, 0.0)
        safe = np.where(chroma > 0, chroma, 1.0)
        hue = np.select(
            [chroma == 0, value == r, value == g],
            [0.0, 60.0 * np.mod((g - b) / safe, 6.0), 60.0 * ((b - r) / safe + 2.0)],
            default=60.0 * ((r - g) / safe + 4.0),
        )

    return hue, saturation, value


def hsv_to_rgb(hue: np.ndarray, saturation: np.ndarray, value: np.ndarray) -> np.ndarray:
    """
    Inverse of rgb_to_hsv.

    :param hue: (np.ndarray) Degrees.
    :param saturation: (np.ndarray) In [0, 1].
    :param value: (np.ndarray) On the 0-255 scale.
    :return: (np.ndarray) Float array of shape (..., 3).
    """

    chroma = value * saturation
    sector = np.mod(hue, 360.0) / 60.0
    second = chroma * (1.0 - np.abs(np.mod(sector, 2.0) - 1.0))
    offset = value - chroma
    zero = np.zeros_like(chroma)
    index = np.clip(np.floor(sector).astype(int), 0, 5)

    table_r = np.stack([chroma, second, zero, zero, second, chroma])
    table_g = np.stack([second, chroma, chroma, second, zero, zero])
    table_b = np.stack([zero, zero, second, chroma, chroma, second])
    pick = index[None, ...]
    r = np.take_along_axis(table_r, pick, axis=0)[0]
    g = np.take_along_axis(table_g, pick, axis=0)[0]
    b = np.take_along_axis(table_b, pick, axis=0)[0]

    return np.stack([r + offset, g + offset, b + offset], axis=-1)


def rgb_to_hsv_value_stats(img: ImageBuffer) -> Tuple[float, float]:
    """
    Population mean and standard deviation of V = max(R, G, B).

    :param img: (ImageBuffer) 3-channel image.
    :return: (tuple) (mean, std) on the 0-255 scale.
    """

    img.require_channels(3, "rgb_to_hsv_value_stats")
    value = img.pixels.max(axis=2).astype(np.float64)

    return float(value.mean()), float(value.std())


def apply_gamma_to_value(img: ImageBuffer, gamma: float) -> ImageBuffer:
    """
    Replaces V with 255 * (V / 255) ** gamma, keeping hue and saturation.

    :param img: (ImageBuffer) 3-channel image.
    :param gamma: (float) Positive exponent.
    :return: (ImageBuffer) Corrected image.
    """

    img.require_channels(3, "apply_gamma_to_value")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")

    hue, saturation, value = rgb_to_hsv(img.pixels)
    corrected = 255.0 * np.power(value / 255.0, gamma)

    return ImageBuffer.from_float(hsv_to_rgb(hue, saturation, corrected))
