"""
Per-stage PNG dumps of the rectifier for visual inspection.
"""

# Import Built-Ins
import logging
from pathlib import Path
from typing import Union

# Import Third-Party
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

# Import Homebrew
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import write_image

# Init Logging Facilities
log = logging.getLogger(__name__)


def _overlay(path: Path, roi: ImageBuffer, search, outcome) -> None:
    figure = Figure(figsize=(max(4.0, roi.width / 80.0), max(2.0, roi.height / 80.0)), dpi=100)
    FigureCanvasAgg(figure)
    axes = figure.add_subplot(1, 1, 1)
    axes.imshow(roi.pixels, cmap="gray" if roi.channels == 1 else None, vmin=0, vmax=255)
    if search.contour is not None:
        points = search.contour.points
        axes.plot(points[:, 0], points[:, 1], color="yellow", linewidth=0.8)
    if search.quad is not None:
        corners = search.quad.corners
        axes.plot(list(corners[:, 0]) + [corners[0, 0]], list(corners[:, 1]) + [corners[0, 1]], color="red",
                  linewidth=1.5)
        for label, (x, y) in zip(("TL", "TR", "BR", "BL"), corners):
            axes.annotate(label, (x, y), color="red", fontsize=7)
    title = outcome.route.value
    if outcome.measure is not None:
        title += f"  fr={outcome.measure.fr:.3f} tilt={outcome.measure.tilt_deg:.1f}"
    axes.set_title(title, fontsize=8)
    axes.set_axis_off()
    figure.savefig(path, bbox_inches="tight")


def dump_rectify_debug(debug_dir: Union[str, Path], name: str, roi: ImageBuffer, search, outcome) -> None:
    """
    Writes ``<name>_edges.png``, ``<name>_overlay.png`` (largest contour and chosen quad) and
    ``<name>_rectified.png`` into ``debug_dir``.

    :param debug_dir: (str) Output directory, created if missing.
    :param name: (str) File name stem.
    :param roi: (ImageBuffer) Input ROI.
    :param search: (QuadSearch) Quadrilateral search products.
    :param outcome: (RectifyOutcome) Rectifier result.
    """

    directory = Path(debug_dir)
    directory.mkdir(parents=True, exist_ok=True)
    write_image(search.edges, directory / f"{name}_edges.png")
    _overlay(directory / f"{name}_overlay.png", roi, search, outcome)
    write_image(outcome.image, directory / f"{name}_rectified.png")
    log.debug("Wrote rectifier debug images for %s to %s", name, directory)
