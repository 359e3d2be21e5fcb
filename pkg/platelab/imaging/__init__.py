"""
Image-processing primitives: color conversion, CLAHE, Canny, contours, morphology, denoising and homographies.
"""

from platelab.imaging.buffer import Contour, Homography, ImageBuffer, Point2, as_points
from platelab.imaging.color import (apply_gamma_to_value, ensure_gray, gray_to_rgb, hsv_to_rgb, rgb_to_hsv,
                                    rgb_to_hsv_value_stats, to_grayscale)
from platelab.imaging.contours import (approx_poly, connected_components, convex_hull, find_contours, is_convex,
                                       min_area_rect, polygon_area, solidity)
from platelab.imaging.denoise import denoise
from platelab.imaging.edges import canny, gaussian_blur, gaussian_kernel, sobel_gradients
from platelab.imaging.enhance import binarize, clahe, equalize_hist, otsu_threshold
from platelab.imaging.geometry import estimate_homography, sample_bilinear, warp_mask, warp_perspective
from platelab.imaging.io import decode_image, encode_jpeg, encode_png, read_image, write_image
from platelab.imaging.morphology import dilate, erode, median3, morph_close
