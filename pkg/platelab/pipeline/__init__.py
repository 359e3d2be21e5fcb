"""
Frame-level orchestration, batch processing and JSON traces.
"""

from platelab.pipeline.batch import BatchItem, FrameResult, process_batch, run_item
from platelab.pipeline.core import (STAGES, PlateReading, ReadingRoute, StageClock, process_frame, process_frame_all,
                                    read_plate)
from platelab.pipeline.trace import dumps_record, frame_to_record, reading_to_record, write_trace
