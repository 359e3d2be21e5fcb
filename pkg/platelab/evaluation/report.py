"""
Tabular and JSON output of evaluation reports.
"""

# Import Built-Ins
import json
from pathlib import Path
from typing import Optional, Union

# Import Third-Party
import pandas as pd

# Import Homebrew
from platelab.evaluation.harness import TABLE_COLUMNS, AblationResult, MetricsReport

REPORT_COLUMNS = TABLE_COLUMNS + ["exact_match_rate", "fallback_rate", "n_plates"]


def report_to_frame(report: MetricsReport) -> pd.DataFrame:
    """
    One row for the whole run followed by one row per angle and illumination category.

    :param report: (MetricsReport) Evaluation report.
    :return: (pd.DataFrame) Rows indexed ``overall``, ``angle=<name>`` and ``illumination=<name>``.
    """

    rows = {"overall": report.summary()}
    rows.update({f"angle={name}": sub.summary() for name, sub in report.by_angle.items()})
    rows.update({f"illumination={name}": sub.summary() for name, sub in report.by_illumination.items()})

    frame = pd.DataFrame.from_dict(rows, orient="index")[REPORT_COLUMNS]
    frame.index.name = "subset"

    return frame


def zero_time(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Copy with every timing column set to 0.0, for byte-stable output.
    """

    frame = frame.copy()
    for column in frame.columns:
        if "time" in column:
            frame[column] = 0.0
    return frame


def format_table(frame: pd.DataFrame, digits: int = 4) -> str:
    """
    Aligned plain-text rendering of a metrics table.
    """

    return frame.to_string(float_format=lambda value: f"{value:.{digits}f}")


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """
    Writes a table as CSV, or as JSON records when the suffix is ``.json``.
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".json":
        path.write_text(frame.reset_index().to_json(orient="records", indent=2, double_precision=10) + "\n",
                        encoding="utf-8")
    else:
        frame.to_csv(path, float_format="%.6f", lineterminator="\n")


def write_report(report: MetricsReport, json_path: Union[str, Path], records_csv: Optional[Union[str, Path]] = None,
                 include_timings: bool = True) -> None:
    """
    Writes the report as JSON and optionally the per-record rows as CSV.

    :param report: (MetricsReport) Evaluation report.
    :param json_path: (str) Destination of the JSON summary.
    :param records_csv: (str) Destination of the per-record dump, or None.
    :param include_timings: (bool) Keep measured times, otherwise zero them.
    """

    payload = report.to_dict()
    if not include_timings:
        for summary in [payload] + list(payload["by_angle"].values()) + list(payload["by_illumination"].values()):
            summary["time_ms"] = summary["median_time_ms"] = 0.0

    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    if records_csv is not None and report.records is not None:
        rows = report.records if include_timings else zero_time(report.records)
        write_table(rows.set_index("image"), records_csv)


def ablation_frame(result: AblationResult, include_timings: bool = True) -> pd.DataFrame:
    return result.table if include_timings else zero_time(result.table)
