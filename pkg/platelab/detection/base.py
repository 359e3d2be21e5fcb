"""
Detection records and the abstract detector port.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from platelab.imaging.buffer import ImageBuffer


@dataclass(frozen=True)
class Box:
    """
    Axis-aligned box in pixel coordinates; x_max and y_max are exclusive.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"Invalid box {self.as_tuple()}: min corner must be strictly below max corner")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Box":
        if len(values) != 4:
            raise ValueError(f"A box needs 4 coordinates, got {len(values)}")
        return cls(*(float(v) for v in values))

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def x_center(self) -> float:
        return (self.x_min + self.x_max) / 2.0

    @property
    def y_center(self) -> float:
        return (self.y_min + self.y_max) / 2.0

    def intersection_area(self, other: "Box") -> float:
        width = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        height = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        return max(0.0, width) * max(0.0, height)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def to_list(self) -> List[float]:
        return [float(v) for v in self.as_tuple()]


@dataclass(frozen=True)
class Detection:
    """
    Class label, box and confidence; shared by car, plate and glyph detectors.
    """

    label: str
    box: Box
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"Confidence must be in [0, 1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {"label": self.label, "box": self.box.to_list(), "confidence": self.confidence}


class DetectorPort(ABC):
    """
    Car and plate detector. Implementations must be safe to call from several worker threads.
    """

    @abstractmethod
    def detect(self, frame: ImageBuffer, conf_threshold: float) -> Tuple[List[Detection], List[Detection]]:
        """
        Detects cars and plates in a frame.

        :param frame: (ImageBuffer) Full frame.
        :param conf_threshold: (float) Minimum confidence of any returned detection.
        :return: (tuple) Car detections and plate detections.
        """

        raise NotImplementedError
