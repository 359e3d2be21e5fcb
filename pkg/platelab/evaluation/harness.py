"""
Evaluation of the pipeline over a manifest, with category breakdowns and the stage-ablation grid.
"""

# Import Built-Ins
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

# Import Third-Party
import numpy as np
import pandas as pd

# Import Homebrew
from platelab.config import PipelineConfig, StageToggles
from platelab.detection.base import DetectorPort
from platelab.evaluation.dataset import EvalRecord, load_manifest
from platelab.evaluation.metrics import CharCounts, alignment_markup, char_counts, similarity
from platelab.fallback.client import VlmPort
from platelab.pipeline.batch import BatchItem, FrameResult, process_batch
from platelab.reading.glyphs import RecognizerPort

# Init Logging Facilities
log = logging.getLogger(__name__)

VlmSource = Union[VlmPort, Callable[[EvalRecord], VlmPort], None]

ABLATION_CONFIGS: Dict[str, StageToggles] = {
    "raw": StageToggles(rectify_on=False, photometric_on=False, vlm_on=False, fast_ocr_on=True),
    "no_illumination": StageToggles(rectify_on=True, photometric_on=False, vlm_on=False, fast_ocr_on=True),
    "no_rectification": StageToggles(rectify_on=False, photometric_on=True, vlm_on=False, fast_ocr_on=True),
    "no_vlm": StageToggles(rectify_on=True, photometric_on=True, vlm_on=False, fast_ocr_on=True),
    "raw_vlm": StageToggles(rectify_on=False, photometric_on=False, vlm_on=True, fast_ocr_on=False),
    "preprocessed_vlm": StageToggles(rectify_on=True, photometric_on=True, vlm_on=True, fast_ocr_on=False),
    "full": StageToggles(rectify_on=True, photometric_on=True, vlm_on=True, fast_ocr_on=True),
}
TABLE_COLUMNS = ["avg_similarity", "precision", "recall", "f1", "time_ms"]


@dataclass
class MetricsReport:
    """
    Aggregate scores of one evaluation run.

    Similarity is averaged per plate; precision, recall and F1 are micro-averaged over summed character
    counts. Errored records count as empty predictions. Category sub-reports carry no nested categories.
    """

    avg_similarity: float
    precision: float
    recall: float
    f1: float
    mean_time_ms: float
    median_time_ms: float
    exact_match_rate: float
    fallback_rate: float
    n_plates: int
    n_excluded_far: int = 0
    n_errors: int = 0
    by_angle: Dict[str, "MetricsReport"] = field(default_factory=dict)
    by_illumination: Dict[str, "MetricsReport"] = field(default_factory=dict)
    records: Optional[pd.DataFrame] = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "avg_similarity": self.avg_similarity,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "time_ms": self.mean_time_ms,
            "median_time_ms": self.median_time_ms,
            "exact_match_rate": self.exact_match_rate,
            "fallback_rate": self.fallback_rate,
            "n_plates": self.n_plates,
            "n_excluded_far": self.n_excluded_far,
            "n_errors": self.n_errors,
        }

    def to_dict(self) -> dict:
        record = self.summary()
        record["by_angle"] = {name: sub.summary() for name, sub in self.by_angle.items()}
        record["by_illumination"] = {name: sub.summary() for name, sub in self.by_illumination.items()}
        return record


def _record_row(record: EvalRecord, result: FrameResult) -> dict:
    reading = result.reading
    prediction = reading.text if reading is not None else ""
    counts = char_counts(record.plate, prediction)

    return {
        "image": record.image,
        "plate": record.plate,
        "prediction": prediction,
        "markup": alignment_markup(record.plate, prediction),
        "similarity": similarity(record.plate, prediction),
        "exact": prediction == record.plate,
        "tp": counts.tp,
        "fp": counts.fp,
        "fn": counts.fn,
        "time_ms": reading.timings["total"] if reading is not None else np.nan,
        "route": reading.route.value if reading is not None else ("Error" if result.failed else "Null"),
        "used_vlm": bool(reading is not None and reading.used_vlm),
        "error": result.error,
        "angle": record.angle_category,
        "illumination": record.illum_category,
        "distance": record.distance,
    }


def summarise(rows: pd.DataFrame, n_excluded_far: int = 0) -> MetricsReport:
    """
    Aggregates per-record rows into a report without category breakdowns.
    """

    if rows.empty:
        return MetricsReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, n_excluded_far)

    counts = CharCounts(int(rows["tp"].sum()), int(rows["fp"].sum()), int(rows["fn"].sum()))
    read = rows[rows["route"].isin(["FastPath", "VlmFallback", "VlmForced"])]
    times = rows["time_ms"].dropna()
    n_errors = int(rows["error"].notna().sum())

    return MetricsReport(
        avg_similarity=float(rows["similarity"].mean()),
        precision=counts.precision,
        recall=counts.recall,
        f1=counts.f1,
        mean_time_ms=float(times.mean()) if len(times) else 0.0,
        median_time_ms=float(times.median()) if len(times) else 0.0,
        exact_match_rate=float(rows["exact"].mean()),
        fallback_rate=float(read["used_vlm"].mean()) if len(read) else 0.0,
        n_plates=len(rows) - n_errors,
        n_excluded_far=n_excluded_far,
        n_errors=n_errors,
    )


def _breakdown(rows: pd.DataFrame, column: str) -> Dict[str, MetricsReport]:
    labelled = rows[rows[column].notna()]
    return {str(name): summarise(group) for name, group in labelled.groupby(column, sort=True)}


def _as_records(manifest: Union[str, Path, Sequence[EvalRecord]]) -> List[EvalRecord]:
    if isinstance(manifest, (str, Path)):
        return load_manifest(manifest)
    return list(manifest)


def _root(manifest: Union[str, Path, Sequence[EvalRecord]], image_root: Optional[Union[str, Path]]) -> Path:
    if image_root is not None:
        return Path(image_root)
    if isinstance(manifest, (str, Path)):
        return Path(manifest).parent
    return Path(".")


def run_eval(manifest: Union[str, Path, Sequence[EvalRecord]], cfg: Optional[PipelineConfig],
             detector: DetectorPort, recognizer: Optional[RecognizerPort], vlm: VlmSource = None,
             image_root: Optional[Union[str, Path]] = None, workers: int = 1, exclude_far: bool = True,
             progress: bool = False) -> MetricsReport:
    """
    Runs the pipeline on every record and scores the reads.

    :param manifest: (str) Manifest path or records.
    :param cfg: (PipelineConfig) Pipeline configuration.
    :param detector: (DetectorPort) Car/plate detector.
    :param recognizer: (RecognizerPort) Fast character reader.
    :param vlm: (VlmPort) Fallback reader, or a factory building one per record.
    :param image_root: (str) Directory image names are relative to; defaults to the manifest's directory.
    :param workers: (int) Worker threads.
    :param exclude_far: (bool) Drop records captured at far distance.
    :param progress: (bool) Show a progress bar.
    :return: (MetricsReport) Overall and per-category scores; per-record rows in ``records``.
    """

    cfg = cfg or PipelineConfig()
    records = _as_records(manifest)
    root = _root(manifest, image_root)

    kept = [r for r in records if not (exclude_far and r.is_far)]
    n_far = len(records) - len(kept)

    shared = vlm if isinstance(vlm, VlmPort) else None
    factory = vlm if callable(vlm) and shared is None else None
    items = [BatchItem(root / r.image, r.image, factory(r) if factory is not None else None) for r in kept]

    results = process_batch(items, detector, recognizer, cfg, shared, workers=workers, all_plates=False,
                            progress=progress)
    rows = pd.DataFrame([_record_row(r, res) for r, res in zip(kept, results)],
                        columns=["image", "plate", "prediction", "markup", "similarity", "exact", "tp", "fp", "fn",
                                 "time_ms", "route", "used_vlm", "error", "angle", "illumination", "distance"])

    report = summarise(rows, n_far)
    report.by_angle = _breakdown(rows, "angle")
    report.by_illumination = _breakdown(rows, "illumination")
    report.records = rows
    log.info("Evaluated %d plates (%d far excluded, %d errors): similarity %.4f, F1 %.4f",
             report.n_plates, n_far, report.n_errors, report.avg_similarity, report.f1)

    return report


@dataclass
class AblationResult:
    table: pd.DataFrame
    reports: Dict[str, MetricsReport]


def run_ablation(manifest: Union[str, Path, Sequence[EvalRecord]], detector: DetectorPort,
                 recognizer: Optional[RecognizerPort], vlm: VlmSource = None,
                 base_cfg: Optional[PipelineConfig] = None, configs: Optional[Sequence[str]] = None,
                 image_root: Optional[Union[str, Path]] = None, workers: int = 1,
                 progress: bool = False) -> AblationResult:
    """
    Evaluates the stage-toggle grid on the same manifest and ports.

    :param manifest: (str) Manifest path or records.
    :param detector: (DetectorPort) Car/plate detector.
    :param recognizer: (RecognizerPort) Fast character reader.
    :param vlm: (VlmPort) Fallback reader or per-record factory; required by configurations using it.
    :param base_cfg: (PipelineConfig) Thresholds shared by every configuration.
    :param configs: (list) Names from ABLATION_CONFIGS to run, in the given order; all by default.
    :param image_root: (str) Directory image names are relative to.
    :param workers: (int) Worker threads.
    :param progress: (bool) Show progress bars.
    :return: (AblationResult) One table row per configuration with columns TABLE_COLUMNS, plus full reports.
    """

    base_cfg = base_cfg or PipelineConfig()
    names = list(configs) if configs is not None else list(ABLATION_CONFIGS)
    unknown = [name for name in names if name not in ABLATION_CONFIGS]
    if unknown:
        raise KeyError(f"Unknown ablation configurations {unknown}; expected names from {list(ABLATION_CONFIGS)}")

    records = _as_records(manifest)
    root = _root(manifest, image_root)

    reports = {}
    for name in names:
        cfg = replace(base_cfg, stages=ABLATION_CONFIGS[name]).validate()
        log.info("Ablation configuration %s", name)
        reports[name] = run_eval(records, cfg, detector, recognizer, vlm if cfg.stages.vlm_on else None,
                                 root, workers, progress=progress)

    table = pd.DataFrame([[reports[name].summary()[column] for column in TABLE_COLUMNS] for name in names],
                         index=pd.Index(names, name="config"), columns=TABLE_COLUMNS)

    return AblationResult(table, reports)

