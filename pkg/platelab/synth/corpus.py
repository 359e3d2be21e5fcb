"""
Reproducible synthetic corpora on disk.

Layout of a corpus directory::

    images/00000.png ...
    manifest.jsonl      one evaluation record per image
    detections.jsonl    car and plate boxes for the fixture detector
"""

# Import Built-Ins
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

# Import Third-Party
import numpy as np
import polars as pl
from tqdm import tqdm

# Import Homebrew
from platelab.exceptions import SceneRejectedError
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import write_image
from platelab.synth.plate import PlateSpec, render_plate
from platelab.synth.scene import GroundTruth, NoiseSpec, SceneSpec, compose_scene, sample_scene

# Init Logging Facilities
log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
DETECTIONS_NAME = "detections.jsonl"
IMAGES_DIR = "images"
MAX_ATTEMPTS = 50


@dataclass(frozen=True)
class SyntheticSample:
    image: ImageBuffer
    name: str
    plate: PlateSpec
    scene: SceneSpec
    truth: GroundTruth

    def manifest_record(self) -> dict:
        record = {"image": self.name}
        record.update(self.truth.to_dict())
        record.update({"h_angle": self.scene.h_angle, "v_angle": self.scene.v_angle,
                       "roll_deg": self.scene.roll_deg, "gain": self.scene.illumination_gain,
                       "scale": self.scene.scale})
        return record

    def detection_record(self) -> dict:
        return {"image": self.name, "cars": [self.truth.car_box.to_list()],
                "plates": [self.truth.plate_box.to_list()]}


def make_sample(index: int, seed: int, angle: str = "mixed", illumination: str = "high",
                distance: str = "normal", noise: Optional[NoiseSpec] = None) -> SyntheticSample:
    """
    Draws, renders and composes one frame; the random stream depends only on (seed, index).

    Scenes whose plate leaves the canvas are resampled.
    """

    rng = np.random.default_rng([seed, index])
    plate = PlateSpec.random(rng)
    plate_img, char_boxes = render_plate(plate)

    for _ in range(MAX_ATTEMPTS):
        scene = sample_scene(rng, angle, illumination, distance, noise)
        try:
            image, truth = compose_scene(plate_img, plate, scene, char_boxes)
        except SceneRejectedError as err:
            log.debug("Sample %d: scene rejected (%s), resampling", index, err)
            continue
        return SyntheticSample(image, f"{IMAGES_DIR}/{index:05d}.png", plate, scene, truth)

    raise SceneRejectedError(f"Sample {index}: no valid scene after {MAX_ATTEMPTS} attempts")


def generate_corpus(out_dir: Union[str, Path], n: int, seed: int = 0, angle: str = "mixed",
                    illumination: str = "high", distance: str = "normal", noise: Optional[NoiseSpec] = None,
                    workers: int = 1, progress: bool = False) -> pl.DataFrame:
    """
    Writes ``n`` synthetic frames with their manifest and detection sidecar.

    :param out_dir: (str) Output directory, created if missing.
    :param n: (int) Number of frames, >= 1.
    :param seed: (int) Corpus seed.
    :param angle: (str) Angle preset: frontal, tilted, steep or mixed.
    :param illumination: (str) Illumination preset: low, medium, high or mixed.
    :param distance: (str) Distance preset: near, normal, far or mixed.
    :param noise: (NoiseSpec) Noise applied to every frame.
    :param workers: (int) Rendering threads.
    :param progress: (bool) Show a progress bar.
    :return: (pl.DataFrame) The manifest, in index order.
    """

    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    out_dir = Path(out_dir)
    (out_dir / IMAGES_DIR).mkdir(parents=True, exist_ok=True)

    def work(index: int) -> Tuple[dict, dict]:
        sample = make_sample(index, seed, angle, illumination, distance, noise)
        write_image(sample.image, out_dir / sample.name)
        return sample.manifest_record(), sample.detection_record()

    manifest, detections = [], []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for record, boxes in tqdm(pool.map(work, range(n)), total=n, disable=not progress, desc="Rendering"):
            manifest.append(record)
            detections.append(boxes)

    frame = pl.DataFrame(manifest)
    frame.write_ndjson(out_dir / MANIFEST_NAME)
    pl.DataFrame(detections).write_ndjson(out_dir / DETECTIONS_NAME)
    log.info("Wrote %d synthetic frames to %s", n, out_dir)

    return frame


def synth_pairs(n: int, seed: int = 0, **presets) -> List[SyntheticSample]:
    """
    In-memory corpus for tests and quick experiments.
    """

    return [make_sample(index, seed, **presets) for index in range(n)]
