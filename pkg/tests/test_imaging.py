# Import Built-Ins
import logging
import warnings
from unittest import TestCase

# Import Third-Party
import numpy as np

# Import Homebrew
from platelab.exceptions import DegenerateGeometryError, ImageFormatError
from platelab.imaging import (Contour, Homography, ImageBuffer, apply_gamma_to_value, approx_poly, binarize, canny,
                              clahe, connected_components, decode_image, denoise, encode_png, equalize_hist,
                              estimate_homography, find_contours, hsv_to_rgb, morph_close, otsu_threshold,
                              rgb_to_hsv, rgb_to_hsv_value_stats, solidity, to_grayscale, warp_perspective)

# Init Logging Facilities
log = logging.getLogger(__name__)


def _rgb(color, width=8, height=6):
    return ImageBuffer(np.full((height, width, 3), color, dtype=np.uint8))


def _gray(value, width=16, height=16):
    return ImageBuffer(np.full((height, width), value, dtype=np.uint8))


def _square_mask(size, boxes):
    pixels = np.zeros((size, size), dtype=np.uint8)
    for x0, y0, x1, y1 in boxes:
        pixels[y0:y1, x0:x1] = 255
    return ImageBuffer(pixels)


class ImageBufferTests(TestCase):

    def test_buffer_validation_works(self):
        with self.assertRaises(ImageFormatError):
            ImageBuffer(np.zeros((4, 4), dtype=np.float32))
        with self.assertRaises(ImageFormatError):
            ImageBuffer(np.zeros((4, 4, 2), dtype=np.uint8))
        with self.assertRaises(ImageFormatError):
            ImageBuffer(np.zeros((0, 4), dtype=np.uint8))

        # Assert that a single trailing channel is squeezed into a gray buffer
        squeezed = ImageBuffer(np.zeros((3, 5, 1), dtype=np.uint8))
        self.assertEqual(squeezed.channels, 1)
        self.assertEqual((squeezed.width, squeezed.height), (5, 3))
        self.assertEqual(len(_rgb((1, 2, 3), 7, 2).data), 7 * 2 * 3)

    def test_buffer_copies_input_works(self):
        source = np.zeros((2, 2), dtype=np.uint8)
        img = ImageBuffer(source)
        source[0, 0] = 9
        self.assertEqual(img.pixels[0, 0], 0)
        self.assertEqual(img.digest(), ImageBuffer(np.zeros((2, 2), dtype=np.uint8)).digest())
        self.assertNotEqual(img.digest(), ImageBuffer(np.zeros((2, 2, 3), dtype=np.uint8)).digest())

    def test_png_codec_is_lossless_works(self):
        rng = np.random.default_rng(3)
        img = ImageBuffer(rng.integers(0, 256, size=(9, 13, 3), dtype=np.uint8))
        self.assertEqual(decode_image(encode_png(img)), img)
        with self.assertRaises(ImageFormatError):
            decode_image(b"not an image")


class ColorTests(TestCase):

    def test_grayscale_weights_works(self):
        self.assertEqual(int(to_grayscale(_rgb((255, 255, 255))).pixels.max()), 255)
        self.assertEqual(int(to_grayscale(_rgb((0, 0, 0))).pixels.max()), 0)
        self.assertEqual(int(to_grayscale(_rgb((255, 0, 0))).pixels[0, 0]), 76)
        with self.assertRaises(ImageFormatError):
            to_grayscale(_gray(3))

    def test_hsv_round_trip_works(self):
        rng = np.random.default_rng(11)
        rgb = rng.integers(0, 256, size=(50, 3)).astype(np.float64)
        hue, saturation, value = rgb_to_hsv(rgb)
        self.assertTrue(np.allclose(hsv_to_rgb(hue, saturation, value), rgb))
        self.assertTrue(np.array_equal(value, rgb.max(axis=1)))

    def test_value_statistics_works(self):
        self.assertEqual(rgb_to_hsv_value_stats(_rgb((100, 50, 25))), (100.0, 0.0))
        self.assertEqual(rgb_to_hsv_value_stats(_rgb((255, 255, 255)))[0], 255.0)

        half = np.zeros((4, 4, 3), dtype=np.uint8)
        half[:, 2:] = 255
        mean, std = rgb_to_hsv_value_stats(ImageBuffer(half))
        self.assertAlmostEqual(mean, 127.5)
        self.assertAlmostEqual(std, 127.5)

    def test_gamma_on_value_channel_works(self):
        rng = np.random.default_rng(5)
        img = ImageBuffer(rng.integers(0, 256, size=(6, 6, 3), dtype=np.uint8))
        self.assertEqual(apply_gamma_to_value(img, 1.0), img)
        self.assertEqual(int(apply_gamma_to_value(_rgb((64, 64, 64)), 0.5).pixels[0, 0, 0]), 128)

        # Assert that a saturated red keeps its hue under any exponent
        for gamma in (0.6, 1.5):
            red = apply_gamma_to_value(_rgb((200, 0, 0)), gamma).pixels[0, 0]
            hue, saturation, _ = rgb_to_hsv(red)
            self.assertAlmostEqual(float(hue), 0.0)
            self.assertAlmostEqual(float(saturation), 1.0)

        with self.assertRaises(ValueError):
            apply_gamma_to_value(img, 0.0)

    def test_gamma_is_monotone_in_value_works(self):
        ramp = np.repeat(np.arange(256, dtype=np.uint8)[None, :, None], 3, axis=2)
        for gamma in (0.6, 0.8, 1.2, 1.5):
            out = apply_gamma_to_value(ImageBuffer(ramp), gamma).pixels[0, :, 0].astype(int)
            self.assertTrue(np.all(np.diff(out) >= 0))


class EnhanceTests(TestCase):

    def test_clahe_on_constant_image_works(self):
        out = clahe(_gray(100, 64, 64), tiles=8, clip=2.0)
        self.assertEqual(out.pixels.shape, (64, 64))
        self.assertEqual(len(np.unique(out.pixels)), 1)

    def test_clahe_expands_low_contrast_gradient_works(self):
        ramp = np.tile(np.linspace(100, 130, 64).round().astype(np.uint8), (64, 1))
        out = clahe(ImageBuffer(ramp), tiles=8, clip=2.0).pixels.astype(int)
        self.assertGreater(out.max() - out.min(), 30)

    def test_clahe_falls_back_on_tiny_image_works(self):
        tiny = ImageBuffer(np.arange(16, dtype=np.uint8).reshape(4, 4))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = clahe(tiny, tiles=8)
        self.assertEqual(len(caught), 1)
        self.assertEqual(out, equalize_hist(tiny))

        with self.assertRaises(ValueError):
            clahe(tiny, tiles=0)
        with self.assertRaises(ValueError):
            clahe(tiny, clip=0.0)

    def test_equalize_two_regions_works(self):
        pixels = np.full((10, 10), 50, dtype=np.uint8)
        pixels[:, 5:] = 200
        out = equalize_hist(ImageBuffer(pixels)).pixels
        self.assertEqual(set(np.unique(out).tolist()), {0, 255})
        self.assertGreaterEqual(out.std(), pixels.std())
        self.assertEqual(equalize_hist(_gray(77)), _gray(77))

    def test_otsu_and_binarize_works(self):
        pixels = np.full((10, 10), 50, dtype=np.uint8)
        pixels[:, 5:] = 200
        img = ImageBuffer(pixels)
        threshold = otsu_threshold(img)
        self.assertTrue(50 <= threshold < 200)

        # Assert that dark pixels become foreground by default
        dark = binarize(img).pixels
        self.assertTrue(np.all(dark[:, :5] == 255))
        self.assertTrue(np.all(dark[:, 5:] == 0))
        bright = binarize(img, dark_foreground=False).pixels
        self.assertTrue(np.array_equal(bright, 255 - dark))
        self.assertFalse(binarize(_gray(9)).pixels.any())


class EdgeTests(TestCase):

    def test_canny_on_constant_image_works(self):
        self.assertFalse(canny(_gray(120, 20, 20)).pixels.any())
        with self.assertRaises(ValueError):
            canny(_gray(1), low=150, high=50)
        with self.assertRaises(ValueError):
            canny(_gray(1), low=0, high=50)
        with self.assertRaises(ValueError):
            canny(_gray(1), low=100, high=256)

        # Assert that the top of the range is accepted
        self.assertFalse(canny(_gray(120, 20, 20), low=100, high=255).pixels.any())

    def test_canny_vertical_step_is_thin_works(self):
        pixels = np.zeros((20, 20), dtype=np.uint8)
        pixels[:, 10:] = 255
        edges = canny(ImageBuffer(pixels)).pixels
        self.assertTrue(set(np.unique(edges).tolist()) <= {0, 255})
        for row in range(2, 18):
            self.assertEqual(int((edges[row] > 0).sum()), 1)

    def test_canny_rectangle_perimeter_works(self):
        pixels = np.zeros((60, 80), dtype=np.uint8)
        pixels[20:40, 20:60] = 255
        edges = canny(ImageBuffer(pixels)).pixels
        perimeter = 2 * (40 + 20)
        self.assertLess(abs(int((edges > 0).sum()) - perimeter), 0.2 * perimeter)

        # Assert that contours of the edge map recover a shape of similar area
        contours = find_contours(ImageBuffer(edges))
        self.assertGreaterEqual(len(contours), 1)
        largest = max(contour.area for contour in contours)
        self.assertLess(abs(largest - 800) / 800, 0.25)


class ContourTests(TestCase):

    def test_find_contours_works(self):
        self.assertEqual(find_contours(_gray(0)), [])

        square = find_contours(_square_mask(20, [(3, 3, 13, 13)]))
        self.assertEqual(len(square), 1)
        self.assertTrue(81 <= square[0].area <= 100)

        pair = _square_mask(30, [(2, 2, 8, 8), (15, 15, 25, 25)])
        self.assertEqual(len(find_contours(pair)), 2)
        self.assertEqual(connected_components(pair)[1], 2)

    def test_approx_poly_works(self):
        triangle = Contour(np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]]))
        self.assertEqual(len(approx_poly(triangle, 1.0)), 3)

        # Assert that a densely traced rectangle collapses to its four corners
        corners = np.array([[0.0, 0.0], [100.0, 0.0], [100.0, 50.0], [0.0, 50.0], [0.0, 0.0]])
        traced = []
        for start, end in zip(corners[:-1], corners[1:]):
            for t in np.linspace(0.0, 1.0, 100, endpoint=False):
                traced.append(start + t * (end - start))
        rectangle = Contour(np.array(traced))
        self.assertEqual(len(rectangle), 400)
        self.assertEqual(len(approx_poly(rectangle, 0.02 * rectangle.perimeter)), 4)

        angles = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False)
        circle = Contour(np.column_stack([50.0 * np.cos(angles), 50.0 * np.sin(angles)]))
        self.assertGreater(len(approx_poly(circle, 1.0)), 8)
        with self.assertRaises(ValueError):
            approx_poly(circle, 0.0)

    def test_solidity_works(self):
        rectangle = Contour(np.array([[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [0.0, 2.0]]))
        self.assertAlmostEqual(solidity(rectangle), 1.0)

        # A unit triangle cut out of the top edge of a 2x2 square
        notched = Contour(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 1.0], [0.0, 2.0]]))
        self.assertAlmostEqual(solidity(notched), 0.75)

        star = [(np.cos(a) * r, np.sin(a) * r)
                for a, r in zip(np.linspace(0, 2 * np.pi, 10, endpoint=False), [10, 4] * 5)]
        self.assertLess(solidity(Contour(np.array(star))), 1.0)

        with self.assertRaises(DegenerateGeometryError):
            solidity(Contour(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])))


class MorphologyTests(TestCase):

    def test_closing_works(self):
        mask = _square_mask(20, [(2, 5, 8, 12), (10, 5, 16, 12)])
        self.assertEqual(morph_close(mask, 1, 1), mask)
        self.assertEqual(connected_components(mask)[1], 2)
        self.assertEqual(connected_components(morph_close(mask, 5, 5))[1], 1)

        full = _gray(255)
        self.assertEqual(morph_close(full, 5, 3), full)
        with self.assertRaises(ValueError):
            morph_close(mask, 4, 3)


class DenoiseTests(TestCase):

    def test_constant_image_is_unchanged_works(self):
        self.assertEqual(denoise(_gray(90, 24, 24)), _gray(90, 24, 24))
        self.assertEqual(denoise(_rgb((10, 20, 30), 12, 12)), _rgb((10, 20, 30), 12, 12))

    def test_noise_is_reduced_works(self):
        rng = np.random.default_rng(0)
        noisy = ImageBuffer(np.clip(128 + rng.normal(0, 15, size=(32, 32)), 0, 255).astype(np.uint8))
        out = denoise(noisy, h=15.0)
        self.assertEqual(out.pixels.shape, noisy.pixels.shape)
        self.assertLess(out.pixels.std(), noisy.pixels.std())

    def test_step_edge_position_survives_works(self):
        rng = np.random.default_rng(1)
        pixels = np.full((24, 32), 60.0)
        pixels[:, 16:] = 190.0
        noisy = ImageBuffer(np.clip(pixels + rng.normal(0, 10, size=pixels.shape), 0, 255).astype(np.uint8))
        profile = denoise(noisy, h=12.0).as_float().mean(axis=0)
        self.assertLessEqual(abs(int(np.argmax(np.diff(profile))) - 15), 1)

        with self.assertRaises(ValueError):
            denoise(noisy, patch=4)


class GeometryTests(TestCase):

    def test_homography_examples_works(self):
        square = [[0, 0], [1, 0], [1, 1], [0, 1]]
        self.assertTrue(np.allclose(estimate_homography(square, square).m, np.eye(3), atol=1e-9))
        doubled = estimate_homography(square, [[0, 0], [2, 0], [2, 2], [0, 2]])
        self.assertTrue(np.allclose(doubled.m, np.diag([2.0, 2.0, 1.0]), atol=1e-9))

        trapezoid = [[0, 0], [100, 0], [80, 50], [20, 50]]
        rect = np.array([[0, 0], [100, 0], [100, 50], [0, 50]], dtype=float)
        fitted = estimate_homography(trapezoid, rect)
        self.assertLess(np.abs(fitted.apply(trapezoid) - rect).max(), 1e-4)

    def test_homography_on_random_quads_works(self):
        rng = np.random.default_rng(2024)
        base = np.array([[0, 0], [200, 0], [200, 80], [0, 80]], dtype=float)
        for _ in range(1000):
            src = base + rng.uniform(-30, 30, size=(4, 2))
            dst = base * rng.uniform(0.5, 2.0) + rng.uniform(-30, 30, size=(4, 2))
            fitted = estimate_homography(src, dst)
            self.assertLess(np.abs(fitted.apply(src) - dst).max(), 1e-4)

    def test_degenerate_homography_raises_works(self):
        with self.assertRaises(DegenerateGeometryError):
            estimate_homography([[0, 0], [1, 1], [2, 2], [0, 1]], [[0, 0], [1, 0], [1, 1], [0, 1]])
        with self.assertRaises(ValueError):
            estimate_homography([[0, 0], [1, 0], [1, 1]], [[0, 0], [1, 0], [1, 1]])
        with self.assertRaises(DegenerateGeometryError):
            Homography(np.zeros((3, 3)))

    def test_warp_identity_and_translation_works(self):
        rng = np.random.default_rng(9)
        img = ImageBuffer(rng.integers(1, 256, size=(20, 20), dtype=np.uint8))
        self.assertEqual(warp_perspective(img, Homography.identity(), 20, 20), img)

        shifted = warp_perspective(img, Homography.translation(5, 0), 20, 20).pixels
        self.assertFalse(shifted[:, :5].any())
        self.assertTrue(np.array_equal(shifted[:, 5:], img.pixels[:, :15]))
        with self.assertRaises(DegenerateGeometryError):
            warp_perspective(img, Homography.identity(), 0, 10)

    def test_warp_round_trip_works(self):
        ys, xs = np.mgrid[0:60, 0:80]
        texture = 128 + 60 * np.sin(xs / 6.0) * np.cos(ys / 7.0) + 0.5 * xs
        img = ImageBuffer.from_float(texture)

        rng = np.random.default_rng(4)
        corners = np.array([[0, 0], [79, 0], [79, 59], [0, 59]], dtype=float)
        forward = estimate_homography(corners, corners + rng.uniform(-8, 8, size=(4, 2)))
        there = warp_perspective(img, forward, 80, 60)
        back = warp_perspective(there, forward.inverse(), 80, 60)

        interior = np.s_[15:45, 15:65]
        error = np.abs(back.as_float()[interior] - img.as_float()[interior]).mean()
        self.assertLess(error, 3.0)
