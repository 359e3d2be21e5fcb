"""
Frame-parallel batch processing with results in input order.
"""

# Import Built-Ins
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

# Import Third-Party
from tqdm import tqdm

# Import Homebrew
from platelab.config import PipelineConfig
from platelab.detection.base import DetectorPort
from platelab.exceptions import PlatelabError
from platelab.fallback.client import VlmPort
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import read_image
from platelab.pipeline.core import PlateReading, process_frame, process_frame_all
from platelab.reading.glyphs import RecognizerPort

# Init Logging Facilities
log = logging.getLogger(__name__)

FrameSource = Union[str, Path, ImageBuffer]


@dataclass(frozen=True)
class BatchItem:
    """
    One frame of a batch: a path or an in-memory image, plus an optional per-item fallback reader.
    """

    source: FrameSource
    name: Optional[str] = None
    vlm: Optional[VlmPort] = None

    @property
    def label(self) -> str:
        if self.name is not None:
            return self.name
        if isinstance(self.source, ImageBuffer):
            return self.source.digest()[:12]
        return str(self.source)


@dataclass(frozen=True)
class FrameResult:
    """
    Readings of one frame, or the error that stopped it.
    """

    source: str
    readings: Tuple[PlateReading, ...] = ()
    error: Optional[str] = None

    @property
    def reading(self) -> Optional[PlateReading]:
        return self.readings[0] if self.readings else None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _as_item(entry: Union[BatchItem, FrameSource]) -> BatchItem:
    return entry if isinstance(entry, BatchItem) else BatchItem(entry)


def run_item(item: BatchItem, detector: DetectorPort, recognizer: Optional[RecognizerPort], cfg: PipelineConfig,
             vlm: Optional[VlmPort] = None, all_plates: bool = False,
             debug_dir: Optional[Union[str, Path]] = None) -> FrameResult:
    """
    Processes one batch item. Any failure becomes an errored result so the rest of the batch keeps going.
    """

    port = item.vlm if item.vlm is not None else vlm
    stem = Path(item.label).stem
    try:
        frame = item.source if isinstance(item.source, ImageBuffer) else read_image(item.source)
        if all_plates:
            readings = process_frame_all(frame, detector, recognizer, cfg, port, debug_dir, stem)
        else:
            reading = process_frame(frame, detector, recognizer, cfg, port, debug_dir, stem)
            readings = [reading] if reading is not None else []
    except (PlatelabError, OSError, ValueError) as err:
        log.warning("Frame %s failed: %s", item.label, err)
        return FrameResult(item.label, error=f"{type(err).__name__}: {err}")
    except Exception as err:
        log.exception("Frame %s failed unexpectedly", item.label)
        return FrameResult(item.label, error=f"{type(err).__name__}: {err}")

    return FrameResult(item.label, tuple(readings))


def process_batch(manifest: Sequence[Union[BatchItem, FrameSource]], detector: DetectorPort,
                  recognizer: Optional[RecognizerPort], cfg: Optional[PipelineConfig] = None,
                  vlm: Optional[VlmPort] = None, workers: int = 1, all_plates: Optional[bool] = None,
                  debug_dir: Optional[Union[str, Path]] = None, progress: bool = False,
                  on_result: Optional[Callable[[FrameResult], None]] = None) -> List[FrameResult]:
    """
    Runs the pipeline over a list of frames.

    Ports are shared between workers and must be safe to call concurrently.

    :param manifest: (list) Paths, images or BatchItem entries.
    :param detector: (DetectorPort) Car/plate detector.
    :param recognizer: (RecognizerPort) Fast character reader.
    :param cfg: (PipelineConfig) Configuration.
    :param vlm: (VlmPort) Default fallback reader for items without their own.
    :param workers: (int) Number of worker threads, >= 1.
    :param all_plates: (bool) Read every validated plate; defaults to ``cfg.detection.all_plates``.
    :param debug_dir: (str) Directory for stage dumps, or None.
    :param progress: (bool) Show a tqdm progress bar.
    :param on_result: (callable) Called with each result in manifest order.
    :return: (list) One FrameResult per manifest entry, in manifest order.
    """

    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    cfg = cfg or PipelineConfig()
    all_plates = cfg.detection.all_plates if all_plates is None else all_plates
    items = [_as_item(entry) for entry in manifest]

    def work(item: BatchItem) -> FrameResult:
        return run_item(item, detector, recognizer, cfg, vlm, all_plates, debug_dir)

    results = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for result in tqdm(pool.map(work, items), total=len(items), disable=not progress, desc="frames"):
            results.append(result)
            if on_result is not None:
                on_result(result)

    errors = sum(result.failed for result in results)
    log.info("Batch of %d frames finished with %d errors", len(results), errors)

    return results
