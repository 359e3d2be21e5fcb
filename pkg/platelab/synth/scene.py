"""
Places a rendered plate in a synthetic street scene.

The plate is modelled as a flat rectangle facing the camera, sheared and rolled in its own plane, then
rotated about the vertical axis by (h_angle - 90) and about the horizontal axis by (v_angle - 90), pushed
to the focal distance and projected through a pinhole with f = 1.2 x canvas width.
"""

# Import Built-Ins
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

# Import Third-Party
import numpy as np
from PIL import Image, ImageFilter

# Import Homebrew
from platelab.detection.base import Box
from platelab.exceptions import SceneRejectedError
from platelab.imaging.buffer import ImageBuffer, PointsLike, as_points
from platelab.imaging.color import rgb_to_hsv
from platelab.imaging.geometry import estimate_homography, warp_mask, warp_perspective
from platelab.reading.glyphs import CharDetection
from platelab.synth.plate import PlateSpec

# Init Logging Facilities
log = logging.getLogger(__name__)

CANVAS_SIZE = (640, 360)
FOCAL_FACTOR = 1.2
BACKGROUND = (70, 80, 90)
CAR_PALETTE = ((175, 175, 180), (140, 140, 140), (200, 180, 140), (120, 170, 120), (130, 160, 200))

ANGLE_NORMAL_MAX = 10.0
ANGLE_TILTED_MAX = 35.0
ILLUM_LOW_BELOW = 80.0
ILLUM_HIGH_ABOVE = 160.0
DISTANCE_NEAR_MIN = 1.25
DISTANCE_NORMAL_MIN = 0.6
LUX_PER_GAIN = 1000.0
MAX_ROLL = 30.0


@dataclass(frozen=True)
class NoiseSpec:
    gaussian_sigma: float = 0.0
    salt_pepper_p: float = 0.0
    blur_radius: float = 0.0

    def __post_init__(self):
        if self.gaussian_sigma < 0 or self.blur_radius < 0:
            raise ValueError("noise sigma and blur radius must be >= 0")
        if not 0.0 <= self.salt_pepper_p <= 1.0:
            raise ValueError(f"salt_pepper_p must be in [0, 1], got {self.salt_pepper_p}")

    @property
    def is_clean(self) -> bool:
        return self.gaussian_sigma == 0 and self.salt_pepper_p == 0 and self.blur_radius == 0


@dataclass(frozen=True)
class SceneSpec:
    """
    Viewpoint, lighting, noise and layout of one synthetic frame.

    h_angle is the horizontal viewing angle in [30, 150] and v_angle the vertical one in [90, 150]; 90/90 is
    a frontal view. roll_deg rotates the plate in its own plane and shear slants it horizontally. scale is the
    plate size relative to a plate of 440 px at the focal distance; offset moves it from the canvas centre.
    """

    h_angle: float = 90.0
    v_angle: float = 90.0
    illumination_gain: float = 1.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    canvas: Tuple[int, int] = CANVAS_SIZE
    background: Tuple[int, int, int] = BACKGROUND
    car_color: Tuple[int, int, int] = CAR_PALETTE[0]
    roll_deg: float = 0.0
    shear: float = 0.0
    scale: float = 1.0
    offset: Tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if not 30.0 <= self.h_angle <= 150.0:
            raise ValueError(f"h_angle must be in [30, 150], got {self.h_angle}")
        if not 90.0 <= self.v_angle <= 150.0:
            raise ValueError(f"v_angle must be in [90, 150], got {self.v_angle}")
        if self.illumination_gain <= 0:
            raise ValueError(f"illumination_gain must be > 0, got {self.illumination_gain}")
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.canvas[0] < 1 or self.canvas[1] < 1:
            raise ValueError(f"canvas must be positive, got {self.canvas}")

    @property
    def focal_length(self) -> float:
        return FOCAL_FACTOR * self.canvas[0]


@dataclass(frozen=True)
class GroundTruth:
    """
    Annotation of one synthetic frame. Corners are TL, TR, BR, BL in scene pixels; char_boxes are in plate
    pixels.
    """

    text: str
    department: str
    plate_corners: np.ndarray
    char_boxes: Tuple[CharDetection, ...]
    angle_category: str
    illum_category: str
    distance_category: str
    plate_box: Box
    car_box: Box
    mean_plate_v: float
    lux: float

    def to_dict(self) -> dict:
        return {
            "plate": self.text,
            "department": self.department,
            "corners": [[float(x), float(y)] for x, y in self.plate_corners],
            "angle": self.angle_category,
            "illumination": self.illum_category,
            "distance": self.distance_category,
            "lux": self.lux,
            "plate_box": self.plate_box.to_list(),
            "car_box": self.car_box.to_list(),
        }


def categorize_angle(h_angle: float, v_angle: float, roll_deg: float = 0.0, normal_max: float = ANGLE_NORMAL_MAX,
                     tilted_max: float = ANGLE_TILTED_MAX) -> str:
    """
    Normal up to ``normal_max`` degrees of deviation from frontal, Tilted up to ``tilted_max``, Steep beyond.
    The deviation is the largest of |h - 90|, |v - 90| and |roll|.
    """

    deviation = max(abs(h_angle - 90.0), abs(v_angle - 90.0), abs(roll_deg))
    if deviation <= normal_max:
        return "Normal"
    if deviation <= tilted_max:
        return "Tilted"

    return "Steep"


def categorize_illumination(mean_v: float) -> str:
    if mean_v < ILLUM_LOW_BELOW:
        return "Low"
    if mean_v > ILLUM_HIGH_ABOVE:
        return "High"

    return "Medium"


def categorize_distance(scale: float) -> str:
    if scale >= DISTANCE_NEAR_MIN:
        return "near"
    if scale >= DISTANCE_NORMAL_MIN:
        return "normal"

    return "far"


def _rotation(scene: SceneSpec) -> np.ndarray:
    yaw = math.radians(scene.h_angle - 90.0)
    pitch = math.radians(scene.v_angle - 90.0)
    roll = math.radians(scene.roll_deg)

    about_z = np.array([[math.cos(roll), -math.sin(roll), 0.0], [math.sin(roll), math.cos(roll), 0.0], [0, 0, 1.0]])
    about_y = np.array([[math.cos(yaw), 0.0, math.sin(yaw)], [0.0, 1.0, 0.0], [-math.sin(yaw), 0.0, math.cos(yaw)]])
    about_x = np.array([[1.0, 0.0, 0.0], [0.0, math.cos(pitch), -math.sin(pitch)], [0.0, math.sin(pitch), math.cos(pitch)]])

    return about_x @ about_y @ about_z


def project_corners(plate_size: Tuple[int, int], scene: SceneSpec, points: Optional[PointsLike] = None) -> np.ndarray:
    """
    Projects plate-pixel points into the scene.

    :param plate_size: (tuple) Plate (width, height) in pixels.
    :param scene: (SceneSpec) Viewpoint.
    :param points: (array-like) Plate points; defaults to the four corner pixels TL, TR, BR, BL.
    :return: (np.ndarray) Scene points of shape (N, 2).
    """

    width, height = plate_size
    if points is None:
        points = [[0, 0], [width - 1, 0], [width - 1, height - 1], [0, height - 1]]
    pts = as_points(points)

    local_x = (pts[:, 0] - (width - 1) / 2.0) * scene.scale
    local_y = (pts[:, 1] - (height - 1) / 2.0) * scene.scale
    local_x = local_x + scene.shear * local_y
    world = _rotation(scene) @ np.vstack([local_x, local_y, np.zeros(len(pts))])

    focal = scene.focal_length
    depth = world[2] + focal
    if np.any(depth <= 1e-6 * focal):
        raise SceneRejectedError("Plate point lies behind the camera")

    centre_x = scene.canvas[0] / 2.0 + scene.offset[0]
    centre_y = scene.canvas[1] / 2.0 + scene.offset[1]

    return np.column_stack([focal * world[0] / depth + centre_x, focal * world[1] / depth + centre_y])


def warp_to_quad(background: ImageBuffer, plate_img: ImageBuffer, corners: PointsLike) -> ImageBuffer:
    """
    Pastes a plate image onto an arbitrary quadrilateral of a background.

    :param background: (ImageBuffer) RGB scene.
    :param plate_img: (ImageBuffer) RGB plate.
    :param corners: (array-like) Destination TL, TR, BR, BL.
    :return: (ImageBuffer) Composite.
    """

    w, h = plate_img.width, plate_img.height
    source = [[0, 0], [w - 1, 0], [w - 1, h - 1], [0, h - 1]]
    homography = estimate_homography(source, corners)

    warped = warp_perspective(plate_img, homography, background.width, background.height).as_float()
    coverage = warp_mask(homography, w, h, background.width, background.height)[:, :, None]

    return ImageBuffer.from_float(coverage * warped + (1.0 - coverage) * background.as_float())


def _car_box(plate: Box, width: int, height: int) -> Box:
    x_min = max(0.0, plate.x_min - 0.5 * plate.width)
    y_min = max(0.0, plate.y_min - 1.5 * plate.height)
    x_max = min(float(width), plate.x_max + 0.5 * plate.width)
    y_max = min(float(height), plate.y_max + 0.6 * plate.height)

    return Box(x_min, y_min, x_max, y_max)


def _apply_noise(values: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    if noise.gaussian_sigma > 0:
        values = np.clip(values + rng.normal(0.0, noise.gaussian_sigma, values.shape), 0.0, 255.0)
    if noise.salt_pepper_p > 0:
        hits = rng.random(values.shape[:2])
        values = values.copy()
        values[hits < noise.salt_pepper_p / 2.0] = 0.0
        values[(hits >= noise.salt_pepper_p / 2.0) & (hits < noise.salt_pepper_p)] = 255.0
    if noise.blur_radius > 0:
        image = Image.fromarray(np.rint(values).astype(np.uint8))
        values = np.asarray(image.filter(ImageFilter.GaussianBlur(noise.blur_radius)), dtype=np.float64)

    return values


def compose_scene(plate_img: ImageBuffer, plate: PlateSpec, scene: SceneSpec,
                  char_boxes: Sequence[CharDetection] = ()) -> Tuple[ImageBuffer, GroundTruth]:
    """
    Renders a frame with the plate mounted on a car body.

    Illumination gain is applied multiplicatively and clipped, then Gaussian noise, salt-and-pepper noise
    and blur, in that order.

    :param plate_img: (ImageBuffer) RGB plate from render_plate.
    :param plate: (PlateSpec) Registration shown on the plate.
    :param scene: (SceneSpec) Viewpoint, lighting and noise.
    :param char_boxes: (list) Plate-local glyph boxes from render_plate.
    :return: (tuple) RGB frame and its ground truth.
    """

    plate_img.require_channels(3, "compose_scene")
    width, height = scene.canvas
    corners = project_corners((plate_img.width, plate_img.height), scene)
    if np.any(corners < 0) or np.any(corners[:, 0] > width - 1) or np.any(corners[:, 1] > height - 1):
        raise SceneRejectedError("Projected plate leaves the canvas")

    plate_box = Box(float(np.floor(corners[:, 0].min())), float(np.floor(corners[:, 1].min())),
                    float(np.ceil(corners[:, 0].max())) + 1.0, float(np.ceil(corners[:, 1].max())) + 1.0)
    car_box = _car_box(plate_box, width, height)

    canvas = np.empty((height, width, 3), dtype=np.uint8)
    canvas[:] = scene.background
    canvas[int(car_box.y_min):int(np.ceil(car_box.y_max)), int(car_box.x_min):int(np.ceil(car_box.x_max))] = \
        scene.car_color
    frame = warp_to_quad(ImageBuffer(canvas, copy=False), plate_img, corners)

    lit = np.clip(frame.as_float() * scene.illumination_gain, 0.0, 255.0)

    source = [[0, 0], [plate_img.width - 1, 0], [plate_img.width - 1, plate_img.height - 1],
              [0, plate_img.height - 1]]
    coverage = warp_mask(estimate_homography(source, corners), plate_img.width, plate_img.height, width, height) > 0.5
    _, _, value = rgb_to_hsv(lit)
    mean_plate_v = float(value[coverage].mean())

    rng = np.random.default_rng(scene.seed)
    noisy = _apply_noise(lit, scene.noise, rng)

    truth = GroundTruth(
        text=plate.text,
        department=plate.department,
        plate_corners=corners,
        char_boxes=tuple(char_boxes),
        angle_category=categorize_angle(scene.h_angle, scene.v_angle, scene.roll_deg),
        illum_category=categorize_illumination(mean_plate_v),
        distance_category=categorize_distance(scene.scale),
        plate_box=plate_box,
        car_box=car_box,
        mean_plate_v=mean_plate_v,
        lux=round(scene.illumination_gain * LUX_PER_GAIN, 3),
    )

    return ImageBuffer.from_float(noisy), truth


ANGLE_PRESETS = {
    "frontal": (0.0, ANGLE_NORMAL_MAX),
    "tilted": (ANGLE_NORMAL_MAX + 1.0, ANGLE_TILTED_MAX),
    "steep": (ANGLE_TILTED_MAX + 1.0, 60.0),
}
ILLUMINATION_PRESETS = {
    "low": (0.2, 0.32),
    "medium": (0.45, 0.65),
    "high": (0.85, 1.15),
}
DISTANCE_PRESETS = {
    "near": (1.25, 1.4),
    "normal": (0.75, 1.1),
    "far": (0.4, 0.55),
}


def _pick(preset: str, table: dict, rng: np.random.Generator) -> Tuple[float, float]:
    if preset == "mixed":
        preset = str(rng.choice(sorted(table)))
    if preset not in table:
        raise ValueError(f"Unknown preset {preset!r}, expected one of {sorted(table) + ['mixed']}")

    return table[preset]


def sample_scene(rng: np.random.Generator, angle: str = "mixed", illumination: str = "high",
                 distance: str = "normal", noise: Optional[NoiseSpec] = None, roll: bool = True) -> SceneSpec:
    """
    Draws a scene from the named presets.

    The angle preset bounds the largest deviation from frontal; one of horizontal, vertical or roll
    carries it and the other two stay within it. Frontal scenes have no roll.

    :param rng: (np.random.Generator) Random source.
    :param angle: (str) frontal, tilted, steep or mixed.
    :param illumination: (str) low, medium, high or mixed.
    :param distance: (str) near, normal, far or mixed.
    :param noise: (NoiseSpec) Noise settings, clean by default.
    :param roll: (bool) Allow in-plane roll to carry the deviation.
    :return: (SceneSpec) Scene.
    """

    low, high = _pick(angle, ANGLE_PRESETS, rng)
    deviation = float(rng.uniform(low, high))
    rolling = roll and low > 0 and high <= ANGLE_TILTED_MAX
    dominant = str(rng.choice(["h", "v", "roll"] if rolling else ["h", "v"]))
    side = float(rng.choice([-1.0, 1.0]))
    spread = min(low, deviation)

    h_dev = deviation * side if dominant == "h" else float(rng.uniform(-spread, spread))
    v_dev = deviation if dominant == "v" else float(rng.uniform(0.0, spread))
    if dominant == "roll":
        roll_deg = side * min(deviation, MAX_ROLL)
    elif roll and low > 0:
        roll_deg = float(rng.uniform(-1.0, 1.0)) * min(spread, ANGLE_NORMAL_MAX)
    else:
        roll_deg = 0.0

    gain_low, gain_high = _pick(illumination, ILLUMINATION_PRESETS, rng)
    scale_low, scale_high = _pick(distance, DISTANCE_PRESETS, rng)

    return SceneSpec(
        h_angle=90.0 + h_dev,
        v_angle=90.0 + v_dev,
        illumination_gain=float(rng.uniform(gain_low, gain_high)),
        noise=noise or NoiseSpec(),
        car_color=tuple(int(c) for c in CAR_PALETTE[int(rng.integers(len(CAR_PALETTE)))]),
        roll_deg=roll_deg,
        shear=float(rng.uniform(-0.05, 0.05)) if low > 0 else 0.0,
        scale=float(rng.uniform(scale_low, scale_high)),
        offset=(float(rng.uniform(-30.0, 30.0)), float(rng.uniform(-20.0, 20.0))),
        seed=int(rng.integers(2 ** 31)),
    )
