"""
Exception hierarchy shared by the recognition pipeline.
"""


class PlatelabError(Exception):
    """
    Base class for every error raised on purpose by platelab.
    """


class ImageFormatError(PlatelabError, ValueError):
    """
    Raster has the wrong dtype, shape or channel count for the requested operation.
    """


class DegenerateGeometryError(PlatelabError, ValueError):
    """
    Geometry cannot be processed: collinear homography corners, zero-area contours or crops.
    """


class AnnotationError(PlatelabError, KeyError):
    """
    A fixture detector was queried for a frame it holds no annotation for.
    """


class SceneRejectedError(PlatelabError, ValueError):
    """
    A synthetic scene projects part of the plate behind the camera or outside the canvas.
    """


class ConfigError(PlatelabError, ValueError):
    """
    Configuration file or override is malformed, or a value is out of its documented range.
    """


class ExternalReplyError(PlatelabError, ValueError):
    """
    An external detector or recogniser process answered with a reply that does not follow the protocol.
    """
