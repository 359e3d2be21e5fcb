"""
Annotation-backed detector used in place of a trained car/plate model.
"""

# Import Built-Ins
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

# Import Third-Party
import numpy as np
import polars as pl
from tqdm import tqdm

# Import Homebrew
from platelab.detection.base import Box, Detection, DetectorPort
from platelab.exceptions import AnnotationError
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import read_image

# Init Logging Facilities
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnotationRecord:
    """
    One line of the detection sidecar: {"image": name, "cars": [[x1, y1, x2, y2], ...], "plates": [...]}.
    """

    image: str
    cars: List[Box] = field(default_factory=list)
    plates: List[Box] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"image": self.image, "cars": [b.to_list() for b in self.cars],
                "plates": [b.to_list() for b in self.plates]}


def _boxes(values) -> List[Box]:
    return [Box.from_sequence(v) for v in (values or [])]


def load_annotations(path: Union[str, Path]) -> List[AnnotationRecord]:
    """
    Reads a detection sidecar JSONL file.

    :param path: (str) Sidecar path.
    :return: (list) Records in file order.
    """

    frame = pl.read_ndjson(path)
    missing = {"image", "cars", "plates"} - set(frame.columns)
    if missing:
        raise AnnotationError(f"Sidecar {path} lacks columns {sorted(missing)}")

    return [AnnotationRecord(str(row["image"]), _boxes(row["cars"]), _boxes(row["plates"]))
            for row in frame.iter_rows(named=True)]


class FixtureDetector(DetectorPort):
    """
    Returns annotated boxes, optionally jittered and randomly dropped.

    Frames are recognised by the digest of their pixels, and the random stream of each frame is seeded
    from (seed, digest), so results do not depend on call order or worker count.
    """

    def __init__(self, annotations: Dict[str, AnnotationRecord], jitter: float = 0.0, drop_rate: float = 0.0,
                 seed: int = 0):
        """
        :param annotations: (dict) Frame digest to annotation record.
        :param jitter: (float) Half-width in pixels of the uniform noise added to each coordinate.
        :param drop_rate: (float) Probability of dropping each box.
        :param seed: (int) Seed of the perturbations.
        """

        if jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {jitter}")
        if not 0.0 <= drop_rate <= 1.0:
            raise ValueError(f"drop_rate must be in [0, 1], got {drop_rate}")

        self.annotations = dict(annotations)
        self.jitter = float(jitter)
        self.drop_rate = float(drop_rate)
        self.seed = int(seed)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[ImageBuffer, AnnotationRecord]], **kwargs) -> "FixtureDetector":
        return cls({frame.digest(): record for frame, record in pairs}, **kwargs)

    @classmethod
    def from_sidecar(cls, path: Union[str, Path], image_root: Optional[Union[str, Path]] = None,
                     **kwargs) -> "FixtureDetector":
        """
        Loads a sidecar and fingerprints every referenced image.

        :param path: (str) Sidecar JSONL path.
        :param image_root: (str) Directory the image names are relative to; defaults to the sidecar's directory.
        :return: (FixtureDetector) Detector.
        """

        root = Path(image_root) if image_root is not None else Path(path).parent
        pairs = []
        for record in tqdm(load_annotations(path), desc="Fingerprinting frames", disable=None):
            image_path = root / record.image
            if not image_path.exists():
                raise AnnotationError(f"Annotated image {image_path} does not exist")
            pairs.append((read_image(image_path), record))

        return cls.from_pairs(pairs, **kwargs)

    def _perturb(self, boxes: List[Box], label: str, frame: ImageBuffer, conf_threshold: float,
                 rng: np.random.Generator) -> List[Detection]:
        detections = []
        for box in boxes:
            dropped = rng.random() < self.drop_rate
            offsets = rng.uniform(-self.jitter, self.jitter, 4)
            confidence = float(rng.uniform(conf_threshold, 1.0))
            if dropped:
                continue
            x_min, y_min, x_max, y_max = np.asarray(box.as_tuple()) + offsets
            x_min, x_max = np.clip([x_min, x_max], 0, frame.width)
            y_min, y_max = np.clip([y_min, y_max], 0, frame.height)
            if x_min >= x_max or y_min >= y_max:
                continue
            detections.append(Detection(label, Box(float(x_min), float(y_min), float(x_max), float(y_max)),
                                        confidence))

        return detections

    def detect(self, frame: ImageBuffer, conf_threshold: float) -> Tuple[List[Detection], List[Detection]]:
        digest = frame.digest()
        record = self.annotations.get(digest)
        if record is None:
            raise AnnotationError(f"No annotation for frame {digest[:12]}")

        rng = np.random.default_rng([self.seed, int(digest[:12], 16)])
        cars = self._perturb(record.cars, "car", frame, conf_threshold, rng)
        plates = self._perturb(record.plates, "plate", frame, conf_threshold, rng)
        log.debug("Fixture detector %s: %d cars, %d plates", record.image, len(cars), len(plates))

        return cars, plates


class WholeFrameDetector(DetectorPort):
    """
    Treats the whole frame as one car holding one plate; for inputs that are already plate crops.
    """

    def detect(self, frame: ImageBuffer, conf_threshold: float) -> Tuple[List[Detection], List[Detection]]:
        box = Box(0.0, 0.0, float(frame.width), float(frame.height))
        return [Detection("car", box, 1.0)], [Detection("plate", box, 1.0)]
