"""
Car/plate detector port, spatial validation, best-box selection and ROI cropping.
"""

from platelab.detection.base import Box, Detection, DetectorPort
from platelab.detection.external import ExternalDetector, JsonLineProcess, parse_detection
from platelab.detection.fixture import AnnotationRecord, FixtureDetector, WholeFrameDetector, load_annotations
from platelab.detection.selection import best_box, crop_padded, inside_fraction, padded_region, validate_plates
