"""
Connected-component template recogniser built on the shared stroke font.
"""

# Import Built-Ins
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

# Import Third-Party
import numpy as np
from PIL import Image
from scipy import ndimage

# Import Homebrew
from platelab.config import ReadingConfig
from platelab.detection.base import Box
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.color import ensure_gray
from platelab.imaging.enhance import binarize
from platelab.imaging.morphology import median3
from platelab.reading import font
from platelab.reading.glyphs import CharDetection, GlyphClass, RecognizerPort

# Init Logging Facilities
log = logging.getLogger(__name__)

GLYPH_SIZE = (24, 40)
WORD_SIZE = (96, 16)
WORD_MIN_SCORE = 0.5
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def normalize_mask(mask: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """
    Crops a boolean mask to its foreground, pads it to the target aspect ratio and resizes it.

    :param mask: (np.ndarray) Boolean mask.
    :param size: (tuple) Target (width, height).
    :return: (np.ndarray) Float array of shape (height, width) in [0, 1].
    """

    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return np.zeros((size[1], size[0]))
    cropped = mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]

    height, width = cropped.shape
    aspect = size[0] / size[1]
    padded_w = max(width, int(round(height * aspect)))
    padded_h = max(height, int(round(width / aspect)))
    canvas = np.zeros((padded_h, padded_w), dtype=np.uint8)
    top, left = (padded_h - height) // 2, (padded_w - width) // 2
    canvas[top:top + height, left:left + width] = np.where(cropped, 255, 0)

    resized = Image.fromarray(canvas).resize(size, Image.BILINEAR)

    return np.asarray(resized, dtype=np.float64) / 255.0


def ncc(a: np.ndarray, b: np.ndarray) -> float:
    """
    Zero-mean normalised cross-correlation of two equally shaped arrays.
    """

    a = a - a.mean()
    b = b - b.mean()
    denominator = np.sqrt((a * a).sum() * (b * b).sum())
    if denominator == 0:
        return 0.0

    return float((a * b).sum() / denominator)


@dataclass(frozen=True)
class TemplateSet:
    """
    Normalised templates: one per single-glyph class plus the BOLIVIA word.
    """

    glyphs: Dict[GlyphClass, np.ndarray]
    word: np.ndarray

    @property
    def classes(self) -> List[GlyphClass]:
        return list(self.glyphs) + [GlyphClass.BOLIVIA]


def build_templates(glyph_width: int = 44, glyph_height: int = 72) -> TemplateSet:
    """
    Renders every class of the stroke font into normalised templates.

    :param glyph_width: (int) Rendering width of a single glyph.
    :param glyph_height: (int) Rendering height of a single glyph.
    :return: (TemplateSet) Templates covering all 38 classes.
    """

    glyphs = {}
    for glyph in GlyphClass:
        if glyph is GlyphClass.BOLIVIA:
            continue
        glyphs[glyph] = normalize_mask(font.render_mask(glyph.value, glyph_width, glyph_height), GLYPH_SIZE)
    word = normalize_mask(font.render_mask(GlyphClass.BOLIVIA.value, 20, 32), WORD_SIZE)

    return TemplateSet(glyphs, word)


class TemplateRecognizer(RecognizerPort):
    """
    Otsu binarisation, connected components with glyph-like height and aspect, and nearest-template
    classification by normalised cross-correlation. Small components in the top band are merged
    horizontally into word candidates for the BOLIVIA class.

    Stateless after construction and therefore safe to share between threads.
    """

    def __init__(self, templates: Optional[TemplateSet] = None, cfg: Optional[ReadingConfig] = None):
        self.templates = templates or build_templates()
        self.cfg = cfg or ReadingConfig()

    def _confidence(self, score: float) -> float:
        floor = self.cfg.score_floor
        return float(np.clip((score - floor) / (1.0 - floor), 0.0, 1.0))

    def classify(self, mask: np.ndarray) -> Tuple[GlyphClass, float]:
        """
        Best single-glyph template for a component mask.

        :param mask: (np.ndarray) Boolean component mask.
        :return: (tuple) Glyph class and raw correlation score.
        """

        sample = normalize_mask(mask, GLYPH_SIZE)
        best_glyph, best_score = GlyphClass.UNDERSCORE, -1.0
        for glyph, template in self.templates.glyphs.items():
            score = ncc(sample, template)
            if score > best_score:
                best_glyph, best_score = glyph, score

        return best_glyph, best_score

    def recognize(self, roi: ImageBuffer) -> List[CharDetection]:
        """
        :param roi: (ImageBuffer) Plate ROI, gray or RGB.
        :return: (list) Glyph detections in component order.
        """

        gray = median3(ensure_gray(roi))
        foreground = binarize(gray).pixels > 0
        labels, count = ndimage.label(foreground, structure=_EIGHT_CONNECTED)
        if count == 0:
            return []

        height, width = foreground.shape
        low, high = self.cfg.min_height_frac * height, self.cfg.max_height_frac * height
        detections = []
        small = np.zeros_like(foreground)

        for index, window in enumerate(ndimage.find_objects(labels), start=1):
            rows, cols = window
            box_h, box_w = rows.stop - rows.start, cols.stop - cols.start
            mask = labels[window] == index
            if low <= box_h <= high and box_w <= self.cfg.max_aspect * box_h:
                glyph, score = self.classify(mask)
                box = Box(float(cols.start), float(rows.start), float(cols.stop), float(rows.stop))
                detections.append(CharDetection(glyph, box, self._confidence(score)))
            elif box_h < low and (rows.start + rows.stop) / 2.0 < 0.4 * height:
                small[window] |= mask

        detections.extend(self._find_words(small, low))
        log.debug("Template recognizer found %d glyphs in %d components", len(detections), count)

        return detections

    def _find_words(self, small: np.ndarray, max_height: float) -> List[CharDetection]:
        if not small.any():
            return []

        height, width = small.shape
        reach = max(3, int(round(0.04 * width)) | 1)
        merged = ndimage.maximum_filter(small, size=(1, reach))
        labels, _ = ndimage.label(merged, structure=_EIGHT_CONNECTED)

        words = []
        for window in ndimage.find_objects(labels):
            rows, cols = window
            box_h, box_w = rows.stop - rows.start, cols.stop - cols.start
            if box_h >= max_height or box_w < 3 * box_h:
                continue
            score = ncc(normalize_mask(small[window], WORD_SIZE), self.templates.word)
            if score >= WORD_MIN_SCORE:
                box = Box(float(cols.start), float(rows.start), float(cols.stop), float(rows.stop))
                words.append(CharDetection(GlyphClass.BOLIVIA, box, self._confidence(score)))

        return words
