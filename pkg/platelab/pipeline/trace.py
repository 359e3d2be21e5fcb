"""
JSON trace records for pipeline results.

Keys are sorted and timings rounded to 0.001 ms; with timings disabled every timing value is 0.0 so
traces of the same inputs are byte-identical across runs and worker counts.
"""

# Import Built-Ins
import json
from pathlib import Path
from typing import IO, Iterable, Union

# Import Homebrew
from platelab.pipeline.batch import FrameResult
from platelab.pipeline.core import STAGES, PlateReading, ReadingRoute


def _timing(value: float, include_timings: bool) -> float:
    return round(value, 3) if include_timings else 0.0


def reading_to_record(reading: PlateReading, include_timings: bool = True) -> dict:
    """
    Serialisable view of one reading; fields of disabled stages are absent.

    :param reading: (PlateReading) Pipeline output.
    :param include_timings: (bool) Keep measured timings, otherwise zero them.
    :return: (dict) JSON-ready record.
    """

    record = {
        "text": reading.text,
        "route": reading.route.value,
        "source_box": reading.source_box.to_dict(),
        "timings": {stage: _timing(reading.timings.get(stage, 0.0), include_timings) for stage in STAGES},
    }
    if reading.assembled is not None:
        record["assembled"] = reading.assembled.to_dict()
    if reading.vlm is not None:
        vlm = reading.vlm.to_dict()
        vlm["latency_ms"] = _timing(vlm["latency_ms"], include_timings)
        record["vlm"] = vlm
    if reading.gamma is not None:
        record["gamma"] = reading.gamma.to_dict()
    if reading.rectification is not None:
        record["rectify_route"] = reading.rectification.route.value
        record["rectification"] = reading.rectification.to_dict()

    return record


def frame_to_record(result: FrameResult, include_timings: bool = True) -> dict:
    """
    One trace record per frame: the best reading's fields, a Null route when no plate was found,
    or the error. Extra plates of all-plates mode are listed under ``plates``.
    """

    if result.failed:
        return {"source": result.source, "error": result.error}
    if result.reading is None:
        return {"source": result.source, "route": ReadingRoute.NULL.value, "text": ""}

    record = reading_to_record(result.reading, include_timings)
    record["source"] = result.source
    if len(result.readings) > 1:
        record["plates"] = [reading_to_record(r, include_timings) for r in result.readings]

    return record


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def write_trace(results: Iterable[FrameResult], target: Union[str, Path, IO[str]],
                include_timings: bool = True) -> int:
    """
    Writes one JSON line per frame.

    :param results: (iterable) Frame results in output order.
    :param target: (str) File path, or an open text stream.
    :param include_timings: (bool) Keep measured timings.
    :return: (int) Number of records written.
    """

    if isinstance(target, (str, Path)):
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            return write_trace(results, handle, include_timings)

    count = 0
    for result in results:
        target.write(dumps_record(frame_to_record(result, include_timings)) + "\n")
        count += 1

    return count
