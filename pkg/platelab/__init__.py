"""
platelab: reading Bolivian licence plates from street frames.

A detector finds cars and plates, the plate crop is rectified and gamma-corrected, a fast character
reader assembles the text, and a vision-language model reads the plates the fast path cannot be trusted on.
"""

from platelab.config import PipelineConfig, apply_overrides, dump_config, load_config
from platelab.exceptions import (AnnotationError, ConfigError, DegenerateGeometryError, ExternalReplyError,
                                 ImageFormatError, PlatelabError, SceneRejectedError)
from platelab.pipeline import PlateReading, ReadingRoute, process_batch, process_frame, process_frame_all

__version__ = "0.1.0"
