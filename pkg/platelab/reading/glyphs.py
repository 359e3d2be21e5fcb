"""
Glyph classes and character detections.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import List

from platelab.detection.base import Box
from platelab.imaging.buffer import ImageBuffer


class GlyphClass(str, Enum):
    """
    The 38 recogniser classes: digits, letters, the BOLIVIA word and an underscore separator.
    """

    ZERO = "0"
    ONE = "1"
    TWO = "2"
    THREE = "3"
    FOUR = "4"
    FIVE = "5"
    SIX = "6"
    SEVEN = "7"
    EIGHT = "8"
    NINE = "9"
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"
    H = "H"
    I = "I"
    J = "J"
    K = "K"
    L = "L"
    M = "M"
    N = "N"
    O = "O"
    P = "P"
    Q = "Q"
    R = "R"
    S = "S"
    T = "T"
    U = "U"
    V = "V"
    W = "W"
    X = "X"
    Y = "Y"
    Z = "Z"
    BOLIVIA = "BOLIVIA"
    UNDERSCORE = "_"

    @property
    def is_ignored(self) -> bool:
        return self in IGNORED_GLYPHS

    @property
    def is_letter(self) -> bool:
        return len(self.value) == 1 and self.value.isalpha()

    @property
    def is_digit(self) -> bool:
        return self.value.isdigit()


IGNORED_GLYPHS = frozenset({GlyphClass.BOLIVIA, GlyphClass.UNDERSCORE})
CHARACTER_GLYPHS = tuple(g for g in GlyphClass if g not in IGNORED_GLYPHS)


@dataclass(frozen=True)
class CharDetection:
    """
    One recognised glyph inside an ROI.
    """

    glyph: GlyphClass
    box: Box
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"Confidence must be in [0, 1], got {self.confidence}")
        object.__setattr__(self, "glyph", GlyphClass(self.glyph))

    @property
    def x_center(self) -> float:
        return self.box.x_center

    @property
    def y_center(self) -> float:
        return self.box.y_center

    def to_dict(self) -> dict:
        return {"glyph": self.glyph.value, "box": self.box.to_list(), "confidence": self.confidence}


class RecognizerPort(ABC):
    """
    Character recogniser over a plate ROI. Implementations must be safe to call from several worker threads.
    """

    @abstractmethod
    def recognize(self, roi: ImageBuffer) -> List[CharDetection]:
        """
        :param roi: (ImageBuffer) Plate ROI.
        :return: (list) Detections with boxes inside the ROI.
        """

        raise NotImplementedError
