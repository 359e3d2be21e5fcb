"""
Three-route geometric rectifier.

Route 1 warps severely foreshortened or tilted plates onto an upright rectangle, Route 2 straightens
the text blob of flat plates after denoising, and everything else passes through untouched so that
moderate distortion is not traded for interpolation blur.
"""

# Import Built-Ins
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

# Import Third-Party
import numpy as np

# Import Homebrew
from platelab.config import ImagingConfig, RectifyConfig
from platelab.exceptions import DegenerateGeometryError
from platelab.imaging.buffer import Contour, Homography, ImageBuffer
from platelab.imaging.color import ensure_gray
from platelab.imaging.contours import (approx_poly, connected_components, find_contours, is_convex, min_area_rect,
                                       solidity)
from platelab.imaging.denoise import denoise
from platelab.imaging.edges import canny
from platelab.imaging.enhance import binarize, clahe
from platelab.imaging.geometry import estimate_homography, warp_perspective
from platelab.imaging.morphology import morph_close
from platelab.rectify.quad import GeometryMeasure, Quadrilateral, calculate_geometry, order_corners

# Init Logging Facilities
log = logging.getLogger(__name__)


class RectifyRoute(str, Enum):
    SEVERE_WARP = "SevereWarp"
    GENTLE_REFINE = "GentleRefine"
    PASS_THROUGH = "PassThrough"


@dataclass(frozen=True)
class RectifyOutcome:
    """
    Rectified image plus the evidence behind the routing decision.

    For PassThrough the image is the input buffer itself.
    """

    image: ImageBuffer
    route: RectifyRoute
    quad: Optional[Quadrilateral] = None
    measure: Optional[GeometryMeasure] = None
    homography: Optional[Homography] = None
    area_ratio: Optional[float] = None
    delta_ratio: Optional[float] = None
    blob_solidity: Optional[float] = None
    blob_area_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "route": self.route.value,
            "quad": self.quad.to_list() if self.quad is not None else None,
            "measure": self.measure.to_dict() if self.measure is not None else None,
            "homography": self.homography.to_list() if self.homography is not None else None,
            "area_ratio": self.area_ratio,
            "delta_ratio": self.delta_ratio,
            "blob_solidity": self.blob_solidity,
            "blob_area_ratio": self.blob_area_ratio,
            "width": self.image.width,
            "height": self.image.height,
        }


@dataclass(frozen=True)
class WarpPlan:
    """
    Homography from a quad onto its upright rectangle, the output size and the largest corner shift.
    """

    homography: Homography
    width: int
    height: int
    delta_max: float


@dataclass(frozen=True)
class TextBlob:
    mask: np.ndarray
    contour: Contour
    solidity: float
    area_ratio: float
    rect: np.ndarray


@dataclass(frozen=True)
class QuadSearch:
    """
    Intermediate products of the quadrilateral search, kept for debug dumps.
    """

    edges: ImageBuffer
    contour: Optional[Contour]
    polygon: Optional[Contour]
    quad: Optional[Quadrilateral]


def is_severe(measure: GeometryMeasure, cfg: RectifyConfig) -> bool:
    return measure.fr > cfg.severe_fr or measure.tilt_deg > cfg.severe_tilt


def is_flat(measure: GeometryMeasure, cfg: RectifyConfig) -> bool:
    return measure.fr < cfg.flat_fr and measure.tilt_deg < cfg.flat_tilt


def decide_route(measure: Optional[GeometryMeasure], area_ratio: Optional[float], delta_ratio: Optional[float] = None,
                 blob_solidity: Optional[float] = None, blob_area_ratio: Optional[float] = None,
                 cfg: Optional[RectifyConfig] = None) -> RectifyRoute:
    """
    Routing decision over measured quantities.

    Route 1 is checked first, then Route 2; every comparison is strict except the guardrail and the
    blob-area band, which are inclusive. A quantity that was never measured (None) fails its gate.

    :param measure: (GeometryMeasure) Foreshortening and tilt, None if no quad was found.
    :param area_ratio: (float) Quad area over ROI area.
    :param delta_ratio: (float) Largest corner displacement over ROI width.
    :param blob_solidity: (float) Solidity of the text blob.
    :param blob_area_ratio: (float) Text blob pixel area over ROI area.
    :param cfg: (RectifyConfig) Thresholds.
    :return: (RectifyRoute) Chosen route.
    """

    cfg = cfg or RectifyConfig()
    if measure is None or area_ratio is None or area_ratio <= cfg.min_quad_area:
        return RectifyRoute.PASS_THROUGH

    if is_severe(measure, cfg):
        if delta_ratio is not None and delta_ratio <= cfg.guardrail:
            return RectifyRoute.SEVERE_WARP
        return RectifyRoute.PASS_THROUGH

    if is_flat(measure, cfg):
        if (blob_solidity is not None and blob_area_ratio is not None and blob_solidity > cfg.min_solidity
                and cfg.blob_area_min <= blob_area_ratio <= cfg.blob_area_max):
            return RectifyRoute.GENTLE_REFINE

    return RectifyRoute.PASS_THROUGH


def search_quadrilateral(roi: ImageBuffer, imaging: Optional[ImagingConfig] = None) -> QuadSearch:
    """
    Grayscale, CLAHE, Canny, a 3x3 closing of the edge map, contour tracing and polygon approximation of
    the largest contour.
    """

    imaging = imaging or ImagingConfig()
    gray = ensure_gray(roi)
    enhanced = clahe(gray, imaging.clahe_tiles, imaging.clahe_clip)
    edges = morph_close(canny(enhanced, imaging.canny_low, imaging.canny_high, imaging.canny_sigma), 3, 3)

    contours = find_contours(edges)
    if not contours:
        return QuadSearch(edges, None, None, None)

    largest = max(contours, key=lambda c: c.area)
    polygon = approx_poly(largest, imaging.approx_epsilon_frac * largest.perimeter)
    quad = None
    if len(polygon) == 4 and is_convex(polygon.points):
        try:
            quad = Quadrilateral.from_points(polygon.points)
        except DegenerateGeometryError:
            quad = None

    return QuadSearch(edges, largest, polygon, quad)


def extract_largest_quadrilateral(roi: ImageBuffer, imaging: Optional[ImagingConfig] = None) -> Optional[Quadrilateral]:
    """
    Finds the plate outline as the largest convex four-vertex contour approximation.

    :param roi: (ImageBuffer) Plate region, at least 20x10 pixels.
    :param imaging: (ImagingConfig) CLAHE, Canny and approximation settings.
    :return: (Quadrilateral) Ordered corners, or None if the largest contour is not a convex quad.
    """

    return search_quadrilateral(roi, imaging).quad


def plan_homography(quad: Quadrilateral) -> WarpPlan:
    """
    Homography mapping the quad onto an upright rectangle sized by its longest opposing edges.

    The largest corner shift is the distance each source corner travels to its destination under H.

    :param quad: (Quadrilateral) Source corners.
    :return: (WarpPlan) Output homography, size and the largest corner displacement in pixels.
    """

    width = max(2, int(round(max(quad.top_len, quad.bottom_len))))
    height = max(2, int(round(max(quad.left_len, quad.right_len))))
    target = np.array([[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]])

    delta_max = float(np.hypot(*(quad.corners - target).T).max())

    return WarpPlan(estimate_homography(quad.corners, target), width, height, delta_max)


def extract_text_blob(denoised: ImageBuffer, cfg: Optional[RectifyConfig] = None) -> Optional[TextBlob]:
    """
    Largest dark component after Otsu binarisation and closing, ignoring components touching the ROI border.

    :param denoised: (ImageBuffer) Denoised ROI.
    :param cfg: (RectifyConfig) Closing kernel size.
    :return: (TextBlob) Blob mask, contour and measures, or None.
    """

    cfg = cfg or RectifyConfig()
    closed = morph_close(binarize(ensure_gray(denoised)), cfg.close_kernel_w, cfg.close_kernel_h)
    labels, count = connected_components(closed)
    if count == 0:
        return None

    touching = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    sizes = np.bincount(labels.ravel(), minlength=count + 1).astype(np.int64)
    sizes[0] = 0
    sizes[touching] = 0
    if sizes.max() == 0:
        return None

    label = int(np.argmax(sizes))
    mask = labels == label
    contours = find_contours(ImageBuffer(np.where(mask, 255, 0).astype(np.uint8), copy=False))
    if not contours:
        return None
    contour = max(contours, key=lambda c: c.area)

    try:
        blob_solidity = solidity(contour)
        rect = order_corners(min_area_rect(contour.points))
    except DegenerateGeometryError:
        return None

    return TextBlob(mask, contour, blob_solidity, float(sizes[label]) / denoised.area, rect)


def _gentle_homography(rect: np.ndarray) -> Homography:
    """
    Maps the blob's rotated rectangle onto the axis-aligned box of the same size and centre.
    """

    width = float(np.hypot(*(rect[1] - rect[0])))
    height = float(np.hypot(*(rect[3] - rect[0])))
    centre = rect.mean(axis=0)
    box = centre + np.array([[-width, -height], [width, -height], [width, height], [-width, height]]) / 2.0

    return estimate_homography(rect, box)


def rectify(roi: ImageBuffer, cfg: Optional[RectifyConfig] = None, imaging: Optional[ImagingConfig] = None,
            debug_dir: Optional[Union[str, Path]] = None, debug_name: str = "roi") -> RectifyOutcome:
    """
    Routes an ROI through severe warping, gentle refinement or pass-through.

    :param roi: (ImageBuffer) Plate region.
    :param cfg: (RectifyConfig) Routing thresholds.
    :param imaging: (ImagingConfig) Primitive settings.
    :param debug_dir: (str) Directory for per-stage PNG dumps, or None.
    :param debug_name: (str) File name stem for the dumps.
    :return: (RectifyOutcome) Result; PassThrough returns the input buffer unchanged.
    """

    cfg = cfg or RectifyConfig()
    imaging = imaging or ImagingConfig()

    if roi.width < cfg.min_roi_w or roi.height < cfg.min_roi_h:
        log.debug("ROI %dx%d below minimum size, passing through", roi.width, roi.height)
        return RectifyOutcome(roi, RectifyRoute.PASS_THROUGH)

    search = search_quadrilateral(roi, imaging)
    quad = search.quad
    measure = calculate_geometry(quad) if quad is not None else None
    area_ratio = quad.area / roi.area if quad is not None else None

    outcome = RectifyOutcome(roi, RectifyRoute.PASS_THROUGH, quad, measure, area_ratio=area_ratio)
    if measure is not None and area_ratio > cfg.min_quad_area:
        if is_severe(measure, cfg):
            outcome = _severe_route(roi, quad, measure, area_ratio, cfg)
        elif is_flat(measure, cfg):
            outcome = _gentle_route(roi, quad, measure, area_ratio, cfg, imaging)

    log.debug("Rectifier route %s (measure=%s, area_ratio=%s)", outcome.route.value, measure, area_ratio)

    if debug_dir is not None:
        from platelab.rectify.debug import dump_rectify_debug

        dump_rectify_debug(debug_dir, debug_name, roi, search, outcome)

    return outcome


def _severe_route(roi: ImageBuffer, quad: Quadrilateral, measure: GeometryMeasure, area_ratio: float,
                  cfg: RectifyConfig) -> RectifyOutcome:
    try:
        plan = plan_homography(quad)
    except DegenerateGeometryError:
        log.debug("Degenerate quad, passing through")
        return RectifyOutcome(roi, RectifyRoute.PASS_THROUGH, quad, measure, area_ratio=area_ratio)

    delta_ratio = plan.delta_max / roi.width
    route = decide_route(measure, area_ratio, delta_ratio=delta_ratio, cfg=cfg)
    if route is not RectifyRoute.SEVERE_WARP:
        return RectifyOutcome(roi, route, quad, measure, area_ratio=area_ratio, delta_ratio=delta_ratio)

    warped = warp_perspective(roi, plan.homography, plan.width, plan.height)

    return RectifyOutcome(warped, route, quad, measure, plan.homography, area_ratio, delta_ratio)


def _gentle_route(roi: ImageBuffer, quad: Quadrilateral, measure: GeometryMeasure, area_ratio: float,
                  cfg: RectifyConfig, imaging: ImagingConfig) -> RectifyOutcome:
    denoised = denoise(roi, imaging.nlm_patch, imaging.nlm_search, imaging.nlm_h)
    blob = extract_text_blob(denoised, cfg)
    if blob is None:
        return RectifyOutcome(roi, RectifyRoute.PASS_THROUGH, quad, measure, area_ratio=area_ratio)

    route = decide_route(measure, area_ratio, blob_solidity=blob.solidity, blob_area_ratio=blob.area_ratio, cfg=cfg)
    if route is not RectifyRoute.GENTLE_REFINE:
        return RectifyOutcome(roi, route, quad, measure, area_ratio=area_ratio, blob_solidity=blob.solidity,
                              blob_area_ratio=blob.area_ratio)

    try:
        homography = _gentle_homography(blob.rect)
    except DegenerateGeometryError:
        return RectifyOutcome(roi, RectifyRoute.PASS_THROUGH, quad, measure, area_ratio=area_ratio,
                              blob_solidity=blob.solidity, blob_area_ratio=blob.area_ratio)

    refined = warp_perspective(denoised, homography, roi.width, roi.height)

    return RectifyOutcome(refined, route, quad, measure, homography, area_ratio, None, blob.solidity,
                          blob.area_ratio)
