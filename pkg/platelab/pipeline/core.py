"""
End-to-end plate reading for one frame.

detect -> validate -> crop -> rectify -> photometric -> recognise -> assemble -> tripwire -> optional VLM.
Stage toggles turn rectification and photometric correction into the identity, disable the fallback
reader, or skip the fast reader so the VLM reads every plate.
"""

# Import Built-Ins
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Union

# Import Homebrew
from platelab.config import PipelineConfig
from platelab.detection.base import Detection, DetectorPort
from platelab.detection.selection import best_box, crop_padded, validate_plates
from platelab.fallback.client import VlmPort, VlmResult
from platelab.imaging.buffer import ImageBuffer
from platelab.photometric.correction import GammaDecision, photometric_correct
from platelab.reading.assembly import AssembledText, assemble, tripwire
from platelab.reading.glyphs import RecognizerPort
from platelab.rectify.router import RectifyOutcome, RectifyRoute, rectify

# Init Logging Facilities
log = logging.getLogger(__name__)

STAGES = ("detect", "rectify", "photometric", "ocr", "vlm", "total")


class ReadingRoute(str, Enum):
    FAST_PATH = "FastPath"
    VLM_FALLBACK = "VlmFallback"
    VLM_FORCED = "VlmForced"
    NULL = "Null"


@dataclass(frozen=True)
class PlateReading:
    """
    Final text of one plate with the evidence of every stage that ran.

    Fields of disabled stages are None; their timing entries are 0.0.
    """

    text: str
    route: ReadingRoute
    source_box: Detection
    timings: Dict[str, float]
    assembled: Optional[AssembledText] = None
    vlm: Optional[VlmResult] = None
    gamma: Optional[GammaDecision] = None
    rectification: Optional[RectifyOutcome] = None

    @property
    def rectify_route(self) -> Optional[RectifyRoute]:
        return self.rectification.route if self.rectification is not None else None

    @property
    def used_vlm(self) -> bool:
        return self.route in (ReadingRoute.VLM_FALLBACK, ReadingRoute.VLM_FORCED)


class StageClock:
    """
    Accumulates wall-clock milliseconds per stage.
    """

    def __init__(self):
        self.timings = {stage: 0.0 for stage in STAGES}

    @contextmanager
    def measure(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[stage] += (time.perf_counter() - start) * 1000.0


def _check_ports(cfg: PipelineConfig, vlm: Optional[VlmPort]) -> None:
    if cfg.stages.vlm_on and vlm is None:
        raise ValueError("stages.vlm_on requires a VLM port")


def _valid_plates(frame: ImageBuffer, detector: DetectorPort, cfg: PipelineConfig) -> List[Detection]:
    cars, plates = detector.detect(frame, cfg.detection.conf_threshold)
    valid = validate_plates(plates, cars, cfg.detection.min_inside)
    log.debug("Detector returned %d cars, %d plates, %d valid", len(cars), len(plates), len(valid))

    return valid


def read_plate(frame: ImageBuffer, plate: Detection, recognizer: Optional[RecognizerPort], cfg: PipelineConfig,
               vlm: Optional[VlmPort] = None, clock: Optional[StageClock] = None,
               debug_dir: Optional[Union[str, Path]] = None, debug_name: str = "plate") -> PlateReading:
    """
    Reads one validated plate detection.

    :param frame: (ImageBuffer) Full frame.
    :param plate: (Detection) Validated plate box.
    :param recognizer: (RecognizerPort) Fast character reader; unused when fast OCR is off.
    :param cfg: (PipelineConfig) Thresholds and stage toggles.
    :param vlm: (VlmPort) Fallback reader; required when the VLM stage is on.
    :param clock: (StageClock) Clock already holding the detect time of this frame.
    :param debug_dir: (str) Directory for rectifier dumps, or None.
    :param debug_name: (str) File name stem for the dumps.
    :return: (PlateReading) Final reading.
    """

    _check_ports(cfg, vlm)
    clock = clock or StageClock()
    stages = cfg.stages
    start = time.perf_counter()

    with clock.measure("detect"):
        roi = crop_padded(frame, plate, cfg.detection.pad_px)

    rectification = None
    if stages.rectify_on:
        with clock.measure("rectify"):
            rectification = rectify(roi, cfg.rectify, cfg.imaging, debug_dir, debug_name)
        roi = rectification.image

    gamma = None
    if stages.photometric_on:
        with clock.measure("photometric"):
            roi, gamma = photometric_correct(roi, cfg.photometric)

    assembled = None
    if stages.fast_ocr_on:
        if recognizer is None:
            raise ValueError("stages.fast_ocr_on requires a recognizer")
        with clock.measure("ocr"):
            chars = recognizer.recognize(roi)
            assembled = assemble(chars, roi.width, roi.height, cfg.reading)

    fast_text = assembled.text if assembled is not None else ""
    if not stages.fast_ocr_on:
        route = ReadingRoute.VLM_FORCED
    elif stages.vlm_on and tripwire(assembled, cfg.reading.tau, cfg.reading.min_chars):
        route = ReadingRoute.VLM_FALLBACK
    else:
        route = ReadingRoute.FAST_PATH

    text, answer = fast_text, None
    if route is not ReadingRoute.FAST_PATH:
        with clock.measure("vlm"):
            answer = vlm.query(roi)
        if answer.failed:
            log.warning("VLM failed (%s), keeping fast-path text %r", answer.reason, fast_text)
        else:
            text = answer.sanitized

    clock.timings["total"] += (time.perf_counter() - start) * 1000.0
    log.debug("Plate read as %r via %s", text, route.value)

    return PlateReading(text, route, plate, dict(clock.timings), assembled, answer, gamma, rectification)


def process_frame(frame: ImageBuffer, detector: DetectorPort, recognizer: Optional[RecognizerPort],
                  cfg: Optional[PipelineConfig] = None, vlm: Optional[VlmPort] = None,
                  debug_dir: Optional[Union[str, Path]] = None, debug_name: str = "frame") -> Optional[PlateReading]:
    """
    Reads the best validated plate of a frame.

    :param frame: (ImageBuffer) Input frame.
    :param detector: (DetectorPort) Car/plate detector.
    :param recognizer: (RecognizerPort) Fast character reader.
    :param cfg: (PipelineConfig) Configuration; defaults are used when None.
    :param vlm: (VlmPort) Fallback reader.
    :param debug_dir: (str) Directory for stage dumps, or None.
    :param debug_name: (str) File name stem for the dumps.
    :return: (PlateReading) Reading, or None when no plate survives validation.
    """

    cfg = cfg or PipelineConfig()
    _check_ports(cfg, vlm)
    clock = StageClock()
    start = time.perf_counter()

    with clock.measure("detect"):
        best = best_box(_valid_plates(frame, detector, cfg))
    clock.timings["total"] = (time.perf_counter() - start) * 1000.0

    if best is None:
        log.debug("No valid plate in frame")
        return None

    return read_plate(frame, best, recognizer, cfg, vlm, clock, debug_dir, debug_name)


def process_frame_all(frame: ImageBuffer, detector: DetectorPort, recognizer: Optional[RecognizerPort],
                      cfg: Optional[PipelineConfig] = None, vlm: Optional[VlmPort] = None,
                      debug_dir: Optional[Union[str, Path]] = None, debug_name: str = "frame") -> List[PlateReading]:
    """
    Reads every validated plate of a frame, most confident first.

    The shared detection time is charged to every reading.
    """

    cfg = cfg or PipelineConfig()
    _check_ports(cfg, vlm)
    start = time.perf_counter()
    plates = sorted(_valid_plates(frame, detector, cfg), key=lambda det: -det.confidence)
    detect_ms = (time.perf_counter() - start) * 1000.0

    readings = []
    for index, plate in enumerate(plates):
        clock = StageClock()
        clock.timings["detect"] = clock.timings["total"] = detect_ms
        readings.append(read_plate(frame, plate, recognizer, cfg, vlm, clock, debug_dir, f"{debug_name}_{index}"))

    return readings
