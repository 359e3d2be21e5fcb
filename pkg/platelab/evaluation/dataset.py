"""
Evaluation manifests: one JSON object per image with the ground-truth plate and its capture metadata.
"""

# Import Built-Ins
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

# Import Third-Party
import polars as pl

# Import Homebrew
from platelab.exceptions import AnnotationError

PLATE_ALPHABET = re.compile(r"[0-9A-Z]+")
DISTANCES = ("near", "normal", "far")


@dataclass(frozen=True)
class EvalRecord:
    image: str
    plate: str
    lux: Optional[float] = None
    distance: str = "normal"
    angle_category: Optional[str] = None
    illum_category: Optional[str] = None

    def __post_init__(self):
        if not self.plate or not PLATE_ALPHABET.fullmatch(self.plate):
            raise ValueError(f"{self.image}: plate must be non-empty over [0-9A-Z], got {self.plate!r}")
        if self.distance not in DISTANCES:
            raise ValueError(f"{self.image}: distance must be one of {DISTANCES}, got {self.distance!r}")

    @property
    def is_far(self) -> bool:
        return self.distance == "far"


def load_manifest(path: Union[str, Path]) -> List[EvalRecord]:
    """
    Reads a manifest JSONL file.

    Required keys are ``image`` and ``plate``; ``lux``, ``distance`` (default normal), ``angle`` and
    ``illumination`` are optional. Other keys are ignored.

    :param path: (str) Manifest path.
    :return: (list) Records in file order.
    """

    frame = pl.read_ndjson(path)
    missing = {"image", "plate"} - set(frame.columns)
    if missing:
        raise AnnotationError(f"Manifest {path} lacks columns {sorted(missing)}")

    records = []
    for row in frame.iter_rows(named=True):
        lux = row.get("lux")
        records.append(EvalRecord(
            image=str(row["image"]),
            plate=str(row["plate"]),
            lux=float(lux) if lux is not None else None,
            distance=row.get("distance") or "normal",
            angle_category=row.get("angle"),
            illum_category=row.get("illumination"),
        ))

    return records
