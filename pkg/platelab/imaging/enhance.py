"""
Histogram based contrast enhancement and global thresholding.
"""

import warnings

import numpy as np

from platelab.imaging.buffer import ImageBuffer


def _histogram(values: np.ndarray) -> np.ndarray:
    return np.bincount(values.ravel(), minlength=256).astype(np.float64)


def equalize_hist(img: ImageBuffer) -> ImageBuffer:
    """
    Global histogram equalisation of a gray image.

    :param img: (ImageBuffer) 1-channel image.
    :return: (ImageBuffer) Equalised image.
    """

    img.require_channels(1, "equalize_hist")
    hist = _histogram(img.pixels)
    cdf = np.cumsum(hist)
    nonzero = cdf[cdf > 0]
    cdf_min = nonzero[0]
    total = cdf[-1]
    if total == cdf_min:
        return img.copy()

    lut = np.clip(np.rint((cdf - cdf_min) / (total - cdf_min) * 255.0), 0, 255).astype(np.uint8)

    return ImageBuffer(lut[img.pixels], copy=False)


def _clipped_lut(hist: np.ndarray, clip: float, tile_area: int) -> np.ndarray:
    """
    Mapping for one tile: clip the histogram, spread the excess evenly, then equalise.
    """

    limit = max(1.0, clip * tile_area / 256.0)
    excess = np.maximum(hist - limit, 0.0).sum()
    clipped = np.minimum(hist, limit) + excess / 256.0
    cdf = np.cumsum(clipped)

    return cdf * (255.0 / tile_area)


def clahe(img: ImageBuffer, tiles: int = 8, clip: float = 2.0) -> ImageBuffer:
    """
    Contrast limited adaptive histogram equalisation.

    The image is split into a tiles x tiles grid. Each tile gets its own clipped equalisation curve and every
    pixel is mapped by bilinear blending of the curves of the four nearest tile centres.

    :param img: (ImageBuffer) 1-channel image.
    :param tiles: (int) Grid count per axis, >= 1.
    :param clip: (float) Clip limit relative to a flat histogram, > 0.
    :return: (ImageBuffer) Enhanced image of the same size.
    """

    img.require_channels(1, "clahe")
    if tiles < 1:
        raise ValueError(f"tiles must be >= 1, got {tiles}")
    if clip <= 0:
        raise ValueError(f"clip must be > 0, got {clip}")

    height, width = img.pixels.shape
    if height < tiles or width < tiles:
        warnings.warn(f"Image {width}x{height} is smaller than a {tiles}x{tiles} grid; using global equalization")
        return equalize_hist(img)

    tile_h = -(-height // tiles)
    tile_w = -(-width // tiles)
    padded = np.pad(img.pixels, ((0, tile_h * tiles - height), (0, tile_w * tiles - width)), mode="reflect")
    blocks = padded.reshape(tiles, tile_h, tiles, tile_w).transpose(0, 2, 1, 3).reshape(tiles, tiles, -1)

    luts = np.empty((tiles, tiles, 256))
    for row in range(tiles):
        for col in range(tiles):
            luts[row, col] = _clipped_lut(_histogram(blocks[row, col]), clip, tile_h * tile_w)

    fy = (np.arange(height) + 0.5) / tile_h - 0.5
    fx = (np.arange(width) + 0.5) / tile_w - 0.5
    y0 = np.clip(np.floor(fy).astype(int), 0, tiles - 1)
    x0 = np.clip(np.floor(fx).astype(int), 0, tiles - 1)
    y1 = np.minimum(y0 + 1, tiles - 1)
    x1 = np.minimum(x0 + 1, tiles - 1)
    wy = np.clip(fy - y0, 0.0, 1.0)[:, None]
    wx = np.clip(fx - x0, 0.0, 1.0)[None, :]

    values = img.pixels
    top = luts[y0[:, None], x0[None, :], values] * (1 - wx) + luts[y0[:, None], x1[None, :], values] * wx
    bottom = luts[y1[:, None], x0[None, :], values] * (1 - wx) + luts[y1[:, None], x1[None, :], values] * wx

    return ImageBuffer.from_float(top * (1 - wy) + bottom * wy)


def otsu_threshold(img: ImageBuffer) -> int:
    """
    Threshold maximising between-class variance.

    :param img: (ImageBuffer) 1-channel image.
    :return: (int) Threshold t; pixels > t form the bright class.
    """

    img.require_channels(1, "otsu_threshold")
    hist = _histogram(img.pixels)
    prob = hist / hist.sum()
    omega = np.cumsum(prob)
    mu = np.cumsum(prob * np.arange(256))
    mu_total = mu[-1]

    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    between = np.nan_to_num(between, nan=0.0, posinf=0.0, neginf=0.0)

    return int(np.argmax(between))


def binarize(img: ImageBuffer, dark_foreground: bool = True) -> ImageBuffer:
    """
    Otsu binarisation to {0, 255}.

    :param img: (ImageBuffer) 1-channel image.
    :param dark_foreground: (bool) Whether pixels at or below the threshold become foreground.
    :return: (ImageBuffer) Binary mask.
    """

    if img.pixels.min() == img.pixels.max():
        return ImageBuffer(np.zeros_like(img.pixels), copy=False)

    threshold = otsu_threshold(img)
    mask = img.pixels <= threshold if dark_foreground else img.pixels > threshold

    return ImageBuffer(np.where(mask, 255, 0).astype(np.uint8), copy=False)
