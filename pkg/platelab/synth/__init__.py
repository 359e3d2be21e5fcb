"""
Synthetic plates, scenes and corpora with exact ground truth.
"""

from platelab.synth.corpus import (DETECTIONS_NAME, MANIFEST_NAME, SyntheticSample, generate_corpus, make_sample,
                                   synth_pairs)
from platelab.synth.plate import PLATE_HEIGHT, PLATE_WIDTH, PlateSpec, main_line_boxes, render_plate
from platelab.synth.scene import (GroundTruth, NoiseSpec, SceneSpec, categorize_angle, categorize_distance,
                                  categorize_illumination, compose_scene, project_corners, sample_scene, warp_to_quad)
