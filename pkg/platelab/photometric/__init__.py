"""
Illumination correction of plate ROIs.
"""

from platelab.photometric.correction import (GammaDecision, LuminanceStats, compute_gamma, luminance_stats,
                                             photometric_correct, should_skip)
