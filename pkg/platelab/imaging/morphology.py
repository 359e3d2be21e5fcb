"""
Binary morphology with rectangular structuring elements.
"""

from scipy import ndimage

from platelab.imaging.buffer import ImageBuffer


def _check_kernel(kernel_w: int, kernel_h: int) -> None:
    if kernel_w < 1 or kernel_h < 1 or kernel_w % 2 == 0 or kernel_h % 2 == 0:
        raise ValueError(f"Kernel dimensions must be odd and >= 1, got {kernel_w}x{kernel_h}")


def dilate(binary: ImageBuffer, kernel_w: int = 3, kernel_h: int = 3) -> ImageBuffer:
    """
    Grey dilation; pixels outside the image count as background.
    """

    binary.require_channels(1, "dilate")
    _check_kernel(kernel_w, kernel_h)
    grown = ndimage.maximum_filter(binary.pixels, size=(kernel_h, kernel_w), mode="constant", cval=0)

    return ImageBuffer(grown, copy=False)


def erode(binary: ImageBuffer, kernel_w: int = 3, kernel_h: int = 3) -> ImageBuffer:
    """
    Grey erosion; pixels outside the image never erode the border.
    """

    binary.require_channels(1, "erode")
    _check_kernel(kernel_w, kernel_h)
    shrunk = ndimage.minimum_filter(binary.pixels, size=(kernel_h, kernel_w), mode="constant", cval=255)

    return ImageBuffer(shrunk, copy=False)


def morph_close(binary: ImageBuffer, kernel_w: int, kernel_h: int) -> ImageBuffer:
    """
    Closing: dilation followed by erosion with a kernel_w x kernel_h rectangle.

    :param binary: (ImageBuffer) 1-channel image.
    :param kernel_w: (int) Odd kernel width.
    :param kernel_h: (int) Odd kernel height.
    :return: (ImageBuffer) Closed image.
    """

    return erode(dilate(binary, kernel_w, kernel_h), kernel_w, kernel_h)


def median3(img: ImageBuffer) -> ImageBuffer:
    """
    3x3 median filter, used to knock out impulse noise before thresholding.
    """

    img.require_channels(1, "median3")
    return ImageBuffer(ndimage.median_filter(img.pixels, size=3, mode="nearest"), copy=False)
