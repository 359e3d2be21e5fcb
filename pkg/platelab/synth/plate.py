"""
Synthetic Bolivian plate renderer.

Layout on a 440 x 140 white canvas with a dark-blue border: the word BOLIVIA small and centred at the
top, the department letter in the top-right corner, and the registration (three or four digits, then
three letters) centred on the main line, all drawn in blue with the shared stroke font.
"""

# Import Built-Ins
from dataclasses import dataclass
from typing import List, Tuple

# Import Third-Party
import numpy as np
from PIL import Image, ImageDraw

# Import Homebrew
from platelab.detection.base import Box
from platelab.imaging.buffer import ImageBuffer
from platelab.reading import font
from platelab.reading.glyphs import CharDetection, GlyphClass

PLATE_WIDTH = 440
PLATE_HEIGHT = 140
PLATE_WHITE = (255, 255, 255)
PLATE_BLUE = (25, 55, 160)
BORDER_PX = 6

WORD_GLYPH = (10, 16)
WORD_TOP = 10
DEPARTMENT_BOX = (392, 10, 410, 40)
MAIN_GLYPH = (44, 72)
MAIN_TOP = 48
GLYPH_GAP = 10
GROUP_GAP = 24

DEPARTMENTS = "LCSOPHTBN"
DIGITS = "0123456789"
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class PlateSpec:
    """
    Registration to render: 3-4 digits, 3 letters and a department letter.
    """

    digits: str
    letters: str
    department: str = "L"
    seed: int = 0

    def __post_init__(self):
        if not (3 <= len(self.digits) <= 4 and all(c in DIGITS for c in self.digits)):
            raise ValueError(f"digits must be 3-4 characters of [0-9], got {self.digits!r}")
        if not (len(self.letters) == 3 and all(c in LETTERS for c in self.letters)):
            raise ValueError(f"letters must be 3 characters of [A-Z], got {self.letters!r}")
        if not (len(self.department) == 1 and self.department in LETTERS):
            raise ValueError(f"department must be one letter of [A-Z], got {self.department!r}")

    @property
    def text(self) -> str:
        return self.digits + self.letters

    @classmethod
    def from_text(cls, text: str, department: str = "L", seed: int = 0) -> "PlateSpec":
        split = len(text) - 3
        return cls(text[:split], text[split:], department, seed)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "PlateSpec":
        """
        Draws a uniformly random registration.
        """

        n_digits = int(rng.integers(3, 5))
        digits = "".join(rng.choice(list(DIGITS), n_digits))
        letters = "".join(rng.choice(list(LETTERS), 3))
        department = str(rng.choice(list(DEPARTMENTS)))

        return cls(digits, letters, department, int(rng.integers(2 ** 31)))


def main_line_boxes(n_digits: int, n_letters: int = 3) -> List[Box]:
    """
    Glyph cells of the main line, centred horizontally, with a wider gap between digits and letters.
    """

    glyph_w, glyph_h = MAIN_GLYPH
    count = n_digits + n_letters
    total = count * glyph_w + (count - 1) * GLYPH_GAP + GROUP_GAP
    x = (PLATE_WIDTH - total) / 2.0

    boxes = []
    for index in range(count):
        if index == n_digits:
            x += GROUP_GAP
        boxes.append(Box(x, float(MAIN_TOP), x + glyph_w, float(MAIN_TOP + glyph_h)))
        x += glyph_w + GLYPH_GAP

    return boxes


def word_box() -> Box:
    glyph_w, glyph_h = WORD_GLYPH
    width = font.word_width(GlyphClass.BOLIVIA.value, glyph_w)
    x0 = (PLATE_WIDTH - width) / 2.0

    return Box(x0, float(WORD_TOP), x0 + width, float(WORD_TOP + glyph_h))


def render_plate(spec: PlateSpec) -> Tuple[ImageBuffer, List[CharDetection]]:
    """
    Draws a plate and reports the exact cell of every glyph.

    :param spec: (PlateSpec) Registration to draw.
    :return: (tuple) RGB image of 440 x 140 and the glyph boxes in plate coordinates: BOLIVIA first,
        then the main line left to right, then the department letter.
    """

    canvas = Image.new("RGB", (PLATE_WIDTH, PLATE_HEIGHT), PLATE_WHITE)
    draw = ImageDraw.Draw(canvas)
    draw.rectangle([0, 0, PLATE_WIDTH - 1, PLATE_HEIGHT - 1], outline=PLATE_BLUE, width=BORDER_PX)

    word = word_box()
    font.draw_word(draw, GlyphClass.BOLIVIA.value, word.x_min, word.y_min, WORD_GLYPH[0], WORD_GLYPH[1], PLATE_BLUE)
    boxes = [CharDetection(GlyphClass.BOLIVIA, word, 1.0)]

    for char, box in zip(spec.text, main_line_boxes(len(spec.digits), len(spec.letters))):
        font.draw_glyph(draw, char, box.x_min, box.y_min, box.width, box.height, PLATE_BLUE)
        boxes.append(CharDetection(GlyphClass(char), box, 1.0))

    department = Box.from_sequence(DEPARTMENT_BOX)
    font.draw_glyph(draw, spec.department, department.x_min, department.y_min, department.width, department.height,
                    PLATE_BLUE)
    boxes.append(CharDetection(GlyphClass(spec.department), department, 1.0))

    return ImageBuffer(np.asarray(canvas), copy=False), boxes
