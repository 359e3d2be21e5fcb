"""
Dynamic gamma correction on the HSV value channel.

Well-exposed ROIs are skipped. Otherwise the exponent is chosen so that the mean value maps onto the
target mean, then clamped to keep extreme crops from being washed out or crushed.
"""

# Import Built-Ins
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

# Import Homebrew
from platelab.config import PhotometricConfig
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.color import apply_gamma_to_value, gray_to_rgb, rgb_to_hsv_value_stats

# Init Logging Facilities
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LuminanceStats:
    mean_v: float
    std_v: float


@dataclass(frozen=True)
class GammaDecision:
    """
    Outcome of the photometric stage; both gamma fields are None exactly when the ROI was skipped.
    """

    skipped: bool
    gamma_raw: Optional[float] = None
    gamma_clamped: Optional[float] = None
    stats: Optional[LuminanceStats] = None

    def to_dict(self) -> dict:
        record = {"skipped": self.skipped}
        if not self.skipped:
            record["gamma_raw"] = self.gamma_raw
            record["gamma_clamped"] = self.gamma_clamped
        if self.stats is not None:
            record["mean_v"] = self.stats.mean_v
            record["std_v"] = self.stats.std_v
        return record


def luminance_stats(roi: ImageBuffer) -> LuminanceStats:
    """
    :param roi: (ImageBuffer) 3-channel ROI.
    :return: (LuminanceStats) Mean and population std of V = max(R, G, B).
    """

    mean_v, std_v = rgb_to_hsv_value_stats(roi)

    return LuminanceStats(mean_v, std_v)


def should_skip(stats: LuminanceStats, cfg: Optional[PhotometricConfig] = None) -> bool:
    cfg = cfg or PhotometricConfig()
    return stats.std_v > cfg.skip_std or cfg.skip_mean_low <= stats.mean_v <= cfg.skip_mean_high


def compute_gamma(mean_v: float, cfg: Optional[PhotometricConfig] = None) -> Tuple[float, float]:
    """
    Exponent mapping mean_v onto the target mean: log(target / 255) / log(mean_v / 255).

    Near-black (mean_v <= 1) and near-white (mean_v >= 254) crops are pinned to the lower and upper
    clamp bound respectively.

    :param mean_v: (float) Mean of the value channel.
    :param cfg: (PhotometricConfig) Target mean and clamp bounds.
    :return: (tuple) Raw and clamped exponent.
    """

    cfg = cfg or PhotometricConfig()
    if mean_v <= 1.0:
        gamma_raw = cfg.gamma_min
    elif mean_v >= 254.0:
        gamma_raw = cfg.gamma_max
    else:
        gamma_raw = math.log(cfg.target_mean / 255.0) / math.log(mean_v / 255.0)

    return gamma_raw, min(cfg.gamma_max, max(cfg.gamma_min, gamma_raw))


def photometric_correct(roi: ImageBuffer, cfg: Optional[PhotometricConfig] = None) -> Tuple[ImageBuffer, GammaDecision]:
    """
    Skips well-exposed ROIs, otherwise applies clamped gamma to the value channel only.

    :param roi: (ImageBuffer) ROI; gray input is expanded to 3 channels first.
    :param cfg: (PhotometricConfig) Skip band, target and clamp.
    :return: (tuple) Corrected image (the input buffer itself when skipped) and the decision.
    """

    cfg = cfg or PhotometricConfig()
    rgb = roi if roi.channels == 3 else gray_to_rgb(roi)
    stats = luminance_stats(rgb)

    if should_skip(stats, cfg):
        log.debug("Photometric skip (mean_v=%.2f, std_v=%.2f)", stats.mean_v, stats.std_v)
        return roi, GammaDecision(skipped=True, stats=stats)

    gamma_raw, gamma_clamped = compute_gamma(stats.mean_v, cfg)
    log.debug("Photometric gamma %.4f clamped to %.4f (mean_v=%.2f)", gamma_raw, gamma_clamped, stats.mean_v)

    return apply_gamma_to_value(rgb, gamma_clamped), GammaDecision(False, gamma_raw, gamma_clamped, stats)
