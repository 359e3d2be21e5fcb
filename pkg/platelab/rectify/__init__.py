"""
Plate quadrilateral extraction and three-route geometric rectification.
"""

from platelab.rectify.quad import GeometryMeasure, Quadrilateral, calculate_geometry, order_corners
from platelab.rectify.router import (RectifyOutcome, RectifyRoute, TextBlob, WarpPlan, decide_route,
                                     extract_largest_quadrilateral, extract_text_blob, plan_homography, rectify,
                                     search_quadrilateral)
