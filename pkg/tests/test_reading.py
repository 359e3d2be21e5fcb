# Import Built-Ins
import logging
import random
import sys
from unittest import TestCase

# Import Third-Party
import numpy as np

# Import Homebrew
from platelab.config import ReadingConfig
from platelab.detection import Box
from platelab.exceptions import ExternalReplyError
from platelab.evaluation.metrics import levenshtein
from platelab.imaging import ImageBuffer
from platelab.reading import (CHARACTER_GLYPHS, AssembledText, CharDetection, ExternalRecognizer, GlyphClass,
                              TemplateRecognizer, assemble, build_templates, filter_ignored, group_lines, ncc,
                              strip_department_code, tripwire, vertical_overlap)
from platelab.synth.plate import PlateSpec, render_plate

# Init Logging Facilities
log = logging.getLogger(__name__)

ECHO_RECOGNIZER = """
import json, sys
for line in sys.stdin:
    request = json.loads(line)
    chars = [{"glyph": "7", "box": [-3, 2, 20, 30], "confidence": 0.7},
             {"glyph": "K", "box": [25, 2, 45, 500]}]
    print(json.dumps({"chars": chars}), flush=True)
"""

# Answers with one valid character and one glyph name outside the alphabet.
BAD_GLYPH_RECOGNIZER = """
import json, sys
for line in sys.stdin:
    chars = [{"glyph": "7", "box": [0, 0, 10, 10]}, {"glyph": "@", "box": [10, 0, 20, 10]}]
    print(json.dumps({"chars": chars}), flush=True)
"""


def _char(glyph, x0, y0, x1, y1, confidence=0.9):
    return CharDetection(GlyphClass(glyph), Box(x0, y0, x1, y1), confidence)


def _line(text, y0=50.0, y1=110.0, x0=20.0, step=50.0, confidence=0.9):
    return [_char(g, x0 + i * step, y0, x0 + i * step + 40, y1, confidence) for i, g in enumerate(text)]


def _oracle_partition(chars, min_overlap=0.5):
    """
    Transitive closure of the pairwise overlap relation by repeated merging.
    """

    groups = [{i} for i in range(len(chars))]
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if any(vertical_overlap(chars[i], chars[j]) >= min_overlap for i in groups[a] for j in groups[b]):
                    groups[a] |= groups.pop(b)
                    merged = True
                    break
            if merged:
                break

    return sorted(sorted(chars[i].box.as_tuple() for i in group) for group in groups)


class GlyphTests(TestCase):

    def test_glyph_classes_works(self):
        self.assertEqual(len(GlyphClass), 38)
        self.assertEqual(len(CHARACTER_GLYPHS), 36)
        self.assertTrue(GlyphClass.BOLIVIA.is_ignored)
        self.assertTrue(GlyphClass("A").is_letter)
        self.assertFalse(GlyphClass.BOLIVIA.is_letter)
        self.assertTrue(GlyphClass("7").is_digit)
        with self.assertRaises(ValueError):
            _char("a", 0, 0, 1, 1)
        with self.assertRaises(ValueError):
            _char("A", 0, 0, 1, 1, confidence=1.5)


class AssemblyTests(TestCase):

    def test_filter_ignored_works(self):
        word = _char("BOLIVIA", 150, 5, 280, 25)
        one, two = _char("1", 0, 50, 40, 110), _char("2", 50, 50, 90, 110)
        self.assertEqual(filter_ignored([word, one, two]), [one, two])
        self.assertEqual(filter_ignored([word, word]), [])
        self.assertEqual(filter_ignored([one, two]), [one, two])
        self.assertEqual(filter_ignored([_char("_", 0, 0, 5, 5), one]), [one])

    def test_group_lines_examples_works(self):
        a, b = _char("A", 0, 0, 10, 10), _char("B", 20, 0, 30, 10)
        self.assertEqual(group_lines([b, a]), [[a, b]])

        low = _char("C", 0, 20, 10, 30)
        self.assertEqual(group_lines([low, a]), [[a], [low]])

        # Assert that exactly half of the shorter height still links two boxes
        half = _char("D", 20, 5, 30, 15)
        self.assertEqual(vertical_overlap(a, half), 0.5)
        self.assertEqual(group_lines([half, a]), [[a, half]])

    def test_group_lines_matches_oracle_works(self):
        rng = random.Random(17)
        for _ in range(1000):
            count = rng.randint(0, 8)
            chars = []
            for _ in range(count):
                x0, y0 = rng.uniform(0, 200), rng.uniform(0, 60)
                chars.append(_char(rng.choice("ABC123"), x0, y0, x0 + rng.uniform(5, 30), y0 + rng.uniform(5, 30)))
            lines = group_lines(chars)

            # Assert that the lines partition the input
            flattened = [c for line in lines for c in line]
            self.assertEqual(sorted(c.box.as_tuple() for c in flattened), sorted(c.box.as_tuple() for c in chars))
            self.assertEqual(sorted(sorted(c.box.as_tuple() for c in line) for line in lines),
                             _oracle_partition(chars))
            for line in lines:
                centres = [c.x_center for c in line]
                self.assertEqual(centres, sorted(centres))

    def test_strip_department_code_works(self):
        main = _line("1234ABC")
        self.assertEqual(strip_department_code([main], 440, 140), (main, None))

        # Assert that an isolated department letter on the upper line loses main-line selection
        department = [_char("L", 392, 10, 410, 40)]
        lines = group_lines(main + department)
        self.assertEqual(len(lines), 2)
        self.assertEqual(strip_department_code(lines, 440, 140), (main, None))

        # Assert that ties between lines pick the bottommost
        upper, lower = _line("123", 0, 20), _line("ABC", 40, 60)
        self.assertEqual(strip_department_code([upper, lower], 440, 140)[0], lower)

        # Assert that a letter in the upper-right corner of the main line is dropped
        row = _line("12AB", 5, 30, x0=0, step=23, confidence=0.8)
        kept, dropped = strip_department_code([row], 100, 100)
        self.assertEqual(dropped, row[-1])
        self.assertEqual(kept, row[:-1])

        # ... but a digit in the same place is not
        digits = _line("1234", 5, 30, x0=0, step=23)
        self.assertEqual(strip_department_code([digits], 100, 100), (digits, None))

        with self.assertRaises(ValueError):
            strip_department_code([], 100, 100)

    def test_assemble_works(self):
        chars = _line("2345KHD")
        for seed in range(10):
            shuffled = list(chars)
            random.Random(seed).shuffle(shuffled)
            assembled = assemble(shuffled, 440, 140)
            self.assertEqual(assembled.text, "2345KHD")
            self.assertEqual(assembled.count, 7)

        self.assertEqual(assemble([], 440, 140), AssembledText("", 0))
        self.assertIsNone(assemble([], 440, 140).min_conf)

        layout = [_char("BOLIVIA", 171, 10, 269, 26, 0.95)] + _line("1234ABC") + [_char("L", 392, 10, 410, 40)]
        assembled = assemble(layout, 440, 140)
        self.assertEqual(assembled.text, "1234ABC")
        self.assertEqual((assembled.min_conf, assembled.max_conf), (0.9, 0.9))
        self.assertNotIn("BOLIVIA", assembled.text)

    def test_assemble_ignores_input_order_works(self):
        rng = random.Random(23)
        digits, letters = "0123456789", "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
        for index in range(1000):
            text = "".join(rng.choice(digits) for _ in range(rng.choice((3, 4))))
            text += "".join(rng.choice(letters) for _ in range(3))
            y0 = rng.uniform(60.0, 80.0)
            layout = [_char(g, 20.0 + i * 50, y0 + rng.uniform(-3, 3), 60.0 + i * 50, y0 + 40 + rng.uniform(-3, 3),
                            rng.uniform(0.3, 1.0)) for i, g in enumerate(text)]

            # Shorter lines above and below the registration
            for top in rng.sample([0.0, 122.0], rng.randint(0, 2)):
                for _ in range(rng.randint(1, 4)):
                    x0 = rng.uniform(0.0, 400.0)
                    layout.append(_char(rng.choice(digits + letters), x0, top, x0 + 20, top + 15, rng.random()))
            for _ in range(rng.randint(0, 2)):
                x0, y0_word = rng.uniform(0.0, 300.0), rng.uniform(0.0, 100.0)
                layout.append(_char("BOLIVIA", x0, y0_word, x0 + 98, y0_word + 16, rng.random()))
            for _ in range(rng.randint(0, 2)):
                x0, y0_bar = rng.uniform(0.0, 420.0), rng.uniform(0.0, 130.0)
                layout.append(_char("_", x0, y0_bar, x0 + 15, y0_bar + 4, rng.random()))
            if rng.random() < 0.5:
                layout.append(_char(rng.choice(letters), 392, 10, 410, 40, rng.random()))

            expected = assemble(layout, 440, 140)
            self.assertEqual(expected.text, text, msg=index)
            for _ in range(3):
                shuffled = list(layout)
                rng.shuffle(shuffled)
                self.assertEqual(assemble(shuffled, 440, 140).to_dict(), expected.to_dict(), msg=index)

            # Assert that ignored classes never reach the text
            self.assertTrue(all(c.glyph.value in digits + letters for c in expected.chars), msg=index)
            self.assertNotIn("_", expected.text)

    def test_tripwire_works(self):
        self.assertTrue(tripwire(assemble(_line("12345"), 440, 140)))
        self.assertFalse(tripwire(assemble(_line("1234ABC"), 440, 140)))

        uneven = _line("1234ABC")
        uneven[-1] = _char("C", uneven[-1].box.x_min, 50, uneven[-1].box.x_max, 110, 0.17)
        assembled = assemble(uneven, 440, 140)
        self.assertAlmostEqual(assembled.min_conf / assembled.max_conf, 0.17 / 0.9)
        self.assertTrue(tripwire(assembled))

        # Boundaries are strict
        self.assertFalse(tripwire(AssembledText("123ABC", 6, 0.2, 1.0)))
        self.assertTrue(tripwire(AssembledText("123ABC", 6, 0.19, 1.0)))
        self.assertTrue(tripwire(AssembledText("12ABC", 5, 1.0, 1.0)))
        self.assertFalse(tripwire(AssembledText("", 0), min_chars=0))
        self.assertTrue(tripwire(AssembledText("", 0)))
        self.assertFalse(tripwire(AssembledText("1A", 2, 0.5, 0.6), tau=0.8, min_chars=2))

        with self.assertRaises(ValueError):
            tripwire(AssembledText("", 0), tau=0.0)
        with self.assertRaises(ValueError):
            tripwire(AssembledText("", 0), min_chars=-1)


class TemplateRecognizerTests(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.recognizer = TemplateRecognizer()

    def test_templates_cover_every_class_works(self):
        templates = build_templates()
        self.assertEqual(set(templates.classes), set(GlyphClass))
        self.assertAlmostEqual(ncc(templates.word, templates.word), 1.0)
        self.assertEqual(ncc(np.zeros((3, 3)), np.ones((3, 3))), 0.0)

        # Assert that every template is its own best match
        for glyph, template in templates.glyphs.items():
            best = max(templates.glyphs, key=lambda other: ncc(template, templates.glyphs[other]))
            self.assertEqual(best, glyph)

    def test_blank_roi_works(self):
        blank = ImageBuffer(np.full((140, 440, 3), 255, dtype=np.uint8))
        self.assertEqual(self.recognizer.recognize(blank), [])

    def test_rendered_plate_is_read_works(self):
        plate, _ = render_plate(PlateSpec("1234", "ABC", "L"))
        chars = self.recognizer.recognize(plate)
        assembled = assemble(chars, plate.width, plate.height)
        self.assertEqual(assembled.text, "1234ABC")
        self.assertGreater(assembled.min_conf, 0.8)
        self.assertFalse(tripwire(assembled))

        # Assert that the BOLIVIA word is recognised and then ignored
        self.assertIn(GlyphClass.BOLIVIA, [c.glyph for c in chars])
        for char in chars:
            self.assertTrue(0 <= char.box.x_min < char.box.x_max <= plate.width)
            self.assertTrue(0 <= char.box.y_min < char.box.y_max <= plate.height)

    def test_every_glyph_is_read_works(self):
        for digits, letters in (("5678", "DEF"), ("9012", "GHJ"), ("345", "KMN"), ("678", "PQR"),
                                ("901", "STU"), ("234", "VWX"), ("567", "YZO"), ("890", "ILA")):
            plate, _ = render_plate(PlateSpec(digits, letters, "S"))
            text = assemble(self.recognizer.recognize(plate), plate.width, plate.height).text
            self.assertEqual(text, digits + letters)

    def test_salt_and_pepper_noise_works(self):
        plate, _ = render_plate(PlateSpec("1234", "ABC", "L"))
        rng = np.random.default_rng(0)
        pixels = plate.pixels.copy()
        hits = rng.random(pixels.shape[:2]) < 0.02
        pixels[hits] = np.where(rng.random(int(hits.sum())) < 0.5, 0, 255)[:, None]
        text = assemble(self.recognizer.recognize(ImageBuffer(pixels)), plate.width, plate.height).text
        self.assertLessEqual(levenshtein(text, "1234ABC"), 1)


class ExternalRecognizerTests(TestCase):

    def test_external_recognizer_works(self):
        recognizer = ExternalRecognizer([sys.executable, "-c", ECHO_RECOGNIZER])
        try:
            roi = ImageBuffer(np.zeros((40, 60), dtype=np.uint8))
            chars = recognizer.recognize(roi)
            self.assertEqual([c.glyph for c in chars], [GlyphClass("7"), GlyphClass("K")])
            self.assertEqual(chars[0].box, Box(0, 2, 20, 30))
            self.assertEqual(chars[1].box, Box(25, 2, 45, 40))
            self.assertEqual(chars[1].confidence, 1.0)
        finally:
            recognizer.close()

    def test_unknown_glyph_reply_raises_works(self):
        recognizer = ExternalRecognizer([sys.executable, "-c", BAD_GLYPH_RECOGNIZER])
        try:
            with self.assertRaises(ExternalReplyError):
                recognizer.recognize(ImageBuffer(np.zeros((40, 60), dtype=np.uint8)))
        finally:
            recognizer.close()

    def test_reading_config_defaults_works(self):
        cfg = ReadingConfig()
        self.assertEqual((cfg.tau, cfg.min_chars, cfg.line_overlap), (0.2, 6, 0.5))
