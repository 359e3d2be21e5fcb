"""
Stroke font shared by the plate renderer and the template recogniser.

Glyphs are polylines on a 6 x 10 design grid (x right, y down) rasterised with round-capped strokes.
The zero carries a slash so it never collides with the letter O.
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

Stroke = Sequence[Tuple[float, float]]

GRID_W = 6.0
GRID_H = 10.0

_OVAL = [(2, 0), (4, 0), (6, 2), (6, 8), (4, 10), (2, 10), (0, 8), (0, 2), (2, 0)]

STROKES: Dict[str, List[Stroke]] = {
    "0": [_OVAL, [(0, 8), (6, 2)]],
    "1": [[(1, 2), (3, 0), (3, 10)], [(1, 10), (5, 10)]],
    "2": [[(0, 2), (2, 0), (4, 0), (6, 2), (6, 4), (0, 10), (6, 10)]],
    "3": [[(0, 1), (2, 0), (4, 0), (6, 2), (6, 3), (4, 5), (2, 5)], [(4, 5), (6, 7), (6, 8), (4, 10), (2, 10), (0, 9)]],
    "4": [[(5, 10), (5, 0), (0, 7), (6, 7)]],
    "5": [[(6, 0), (0, 0), (0, 4), (4, 4), (6, 6), (6, 8), (4, 10), (0, 10)]],
    "6": [[(5, 0), (2, 0), (0, 3), (0, 8), (2, 10), (4, 10), (6, 8), (6, 6), (4, 4), (0, 5)]],
    "7": [[(0, 0), (6, 0), (2, 10)]],
    "8": [[(3, 5), (1, 4), (1, 1), (2, 0), (4, 0), (5, 1), (5, 4), (3, 5)],
          [(3, 5), (0, 7), (0, 9), (1, 10), (5, 10), (6, 9), (6, 7), (3, 5)]],
    "9": [[(6, 5), (2, 6), (0, 4), (0, 2), (2, 0), (4, 0), (6, 2), (6, 7), (4, 10), (1, 10)]],
    "A": [[(0, 10), (3, 0), (6, 10)], [(1.2, 6), (4.8, 6)]],
    "B": [[(0, 10), (0, 0), (4, 0), (6, 1.5), (6, 3.5), (4, 5), (0, 5)], [(4, 5), (6, 6.5), (6, 8.5), (4, 10), (0, 10)]],
    "C": [[(6, 1), (5, 0), (2, 0), (0, 2), (0, 8), (2, 10), (5, 10), (6, 9)]],
    "D": [[(0, 0), (0, 10), (3, 10), (6, 7), (6, 3), (3, 0), (0, 0)]],
    "E": [[(6, 0), (0, 0), (0, 10), (6, 10)], [(0, 5), (4, 5)]],
    "F": [[(6, 0), (0, 0), (0, 10)], [(0, 5), (4, 5)]],
    "G": [[(6, 1), (5, 0), (2, 0), (0, 2), (0, 8), (2, 10), (5, 10), (6, 9), (6, 6), (3, 6)]],
    "H": [[(0, 0), (0, 10)], [(6, 0), (6, 10)], [(0, 5), (6, 5)]],
    "I": [[(1, 0), (5, 0)], [(3, 0), (3, 10)], [(1, 10), (5, 10)]],
    "J": [[(2, 0), (6, 0)], [(5, 0), (5, 8), (3, 10), (1, 10), (0, 8)]],
    "K": [[(0, 0), (0, 10)], [(6, 0), (0, 6)], [(2, 4), (6, 10)]],
    "L": [[(0, 0), (0, 10), (6, 10)]],
    "M": [[(0, 10), (0, 0), (3, 6), (6, 0), (6, 10)]],
    "N": [[(0, 10), (0, 0), (6, 10), (6, 0)]],
    "O": [_OVAL],
    "P": [[(0, 10), (0, 0), (4, 0), (6, 1.5), (6, 4), (4, 5.5), (0, 5.5)]],
    "Q": [_OVAL, [(3, 7), (6, 10)]],
    "R": [[(0, 10), (0, 0), (4, 0), (6, 1.5), (6, 4), (4, 5.5), (0, 5.5)], [(3, 5.5), (6, 10)]],
    "S": [[(6, 1), (5, 0), (1, 0), (0, 1), (0, 4), (1, 5), (5, 5), (6, 6), (6, 9), (5, 10), (1, 10), (0, 9)]],
    "T": [[(0, 0), (6, 0)], [(3, 0), (3, 10)]],
    "U": [[(0, 0), (0, 8), (2, 10), (4, 10), (6, 8), (6, 0)]],
    "V": [[(0, 0), (3, 10), (6, 0)]],
    "W": [[(0, 0), (1.5, 10), (3, 4), (4.5, 10), (6, 0)]],
    "X": [[(0, 0), (6, 10)], [(6, 0), (0, 10)]],
    "Y": [[(0, 0), (3, 5), (6, 0)], [(3, 5), (3, 10)]],
    "Z": [[(0, 0), (6, 0), (0, 10), (6, 10)]],
    "_": [[(0, 10), (6, 10)]],
}

WORD_SPACING = 0.4


def stroke_width(glyph_height: float) -> int:
    """
    Stroke thickness in pixels for a glyph of the given height.
    """

    return max(1, int(round(glyph_height / 9.0)))


def draw_glyph(draw: ImageDraw.ImageDraw, char: str, x0: float, y0: float, width: float, height: float,
               fill=255) -> None:
    """
    Rasterises one glyph so that its strokes stay inside the box (x0, y0, width, height).

    :param draw: (ImageDraw) Target drawing context.
    :param char: (str) Glyph key of STROKES.
    :param x0: (float) Left edge of the box.
    :param y0: (float) Top edge of the box.
    :param width: (float) Box width.
    :param height: (float) Box height.
    :param fill: Pen colour in the image's mode.
    """

    if char not in STROKES:
        raise KeyError(f"No stroke definition for glyph {char!r}")

    pen = stroke_width(height)
    half = pen / 2.0
    scale_x = max(width - pen, 1.0) / GRID_W
    scale_y = max(height - pen, 1.0) / GRID_H

    for stroke in STROKES[char]:
        points = [(x0 + half + gx * scale_x, y0 + half + gy * scale_y) for gx, gy in stroke]
        draw.line(points, fill=fill, width=pen, joint="curve")
        for px, py in points:
            draw.ellipse([px - half, py - half, px + half, py + half], fill=fill)


def word_width(text: str, glyph_width: float) -> float:
    return len(text) * glyph_width + max(0, len(text) - 1) * WORD_SPACING * glyph_width


def draw_word(draw: ImageDraw.ImageDraw, text: str, x0: float, y0: float, glyph_width: float, height: float,
              fill=255) -> None:
    """
    Rasterises a word glyph by glyph with WORD_SPACING gaps.
    """

    step = glyph_width * (1.0 + WORD_SPACING)
    for index, char in enumerate(text):
        draw_glyph(draw, char, x0 + index * step, y0, glyph_width, height, fill)


def render_mask(text: str, glyph_width: int, height: int) -> np.ndarray:
    """
    Boolean mask of a glyph or a word drawn on a tight canvas.

    :param text: (str) A single glyph key or a word of glyph keys.
    :param glyph_width: (int) Width of one glyph.
    :param height: (int) Glyph height.
    :return: (np.ndarray) Boolean array of shape (height, word width).
    """

    width = int(np.ceil(word_width(text, glyph_width))) if len(text) > 1 else glyph_width
    canvas = Image.new("L", (width, height), 0)
    draw = ImageDraw.Draw(canvas)
    if len(text) == 1:
        draw_glyph(draw, text, 0, 0, glyph_width, height)
    else:
        draw_word(draw, text, 0, 0, glyph_width, height)

    return np.asarray(canvas) > 127
