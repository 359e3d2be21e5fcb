"""
PNG/JPEG encoding and file I/O through Pillow.
"""

import io
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from platelab.exceptions import ImageFormatError
from platelab.imaging.buffer import ImageBuffer

PathLike = Union[str, Path]


def _from_pil(image: Image.Image) -> ImageBuffer:
    if image.mode not in ("L", "RGB"):
        image = image.convert("L" if image.mode in ("1", "I", "I;16", "F") else "RGB")

    return ImageBuffer(np.asarray(image, dtype=np.uint8))


def _to_pil(img: ImageBuffer) -> Image.Image:
    return Image.fromarray(img.pixels)


def read_image(path: PathLike) -> ImageBuffer:
    """
    Loads an image file as a gray or RGB buffer.

    :param path: (str) File path.
    :return: (ImageBuffer) Decoded raster.
    """

    try:
        with Image.open(path) as image:
            image.load()
            return _from_pil(image)
    except UnidentifiedImageError as err:
        raise ImageFormatError(f"Cannot decode image {path}") from err


def write_image(img: ImageBuffer, path: PathLike) -> None:
    """
    Writes a lossless PNG, creating parent directories.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _to_pil(img).save(path, format="PNG")


def encode_png(img: ImageBuffer) -> bytes:
    buffer = io.BytesIO()
    _to_pil(img).save(buffer, format="PNG")
    return buffer.getvalue()


def encode_jpeg(img: ImageBuffer, quality: int = 90) -> bytes:
    """
    JPEG bytes of a buffer.

    :param img: (ImageBuffer) Raster to encode.
    :param quality: (int) JPEG quality in [1, 100].
    :return: (bytes) Encoded image.
    """

    buffer = io.BytesIO()
    _to_pil(img).save(buffer, format="JPEG", quality=int(quality))

    return buffer.getvalue()


def decode_image(payload: bytes) -> ImageBuffer:
    try:
        with Image.open(io.BytesIO(payload)) as image:
            image.load()
            return _from_pil(image)
    except UnidentifiedImageError as err:
        raise ImageFormatError("Cannot decode image payload") from err
