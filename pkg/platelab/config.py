"""
Typed pipeline configuration backed by an INI file.

Every section of the INI document maps to one dataclass below and every key to one field, so the
flat dotted view ``section.key`` addresses exactly one setting.
"""

# Import Built-Ins
import configparser
import io
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional

# Import Homebrew
from platelab.exceptions import ConfigError

# Init Logging Facilities
log = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "PLATELAB_VLM_ENDPOINT"


@dataclass
class ImagingConfig:
    """
    Parameters of the low-level image primitives used by the rectifier.
    """

    clahe_tiles: int = 8
    clahe_clip: float = 2.0
    canny_low: float = 50.0
    canny_high: float = 150.0
    canny_sigma: float = 1.4
    approx_epsilon_frac: float = 0.02
    nlm_patch: int = 7
    nlm_search: int = 21
    nlm_h: float = 10.0


@dataclass
class DetectionConfig:
    """
    Detector gating, spatial validation and ROI cropping.
    """

    conf_threshold: float = 0.50
    pad_px: int = 10
    min_inside: float = 0.9
    all_plates: bool = False


@dataclass
class RectifyConfig:
    """
    Thresholds of the three-route geometric rectifier.
    """

    severe_fr: float = 1.15
    severe_tilt: float = 15.0
    flat_fr: float = 1.06
    flat_tilt: float = 5.0
    guardrail: float = 0.25
    min_quad_area: float = 0.15
    min_solidity: float = 0.45
    blob_area_min: float = 0.05
    blob_area_max: float = 0.80
    close_kernel_w: int = 5
    close_kernel_h: int = 3
    min_roi_w: int = 20
    min_roi_h: int = 10


@dataclass
class PhotometricConfig:
    """
    Skip band and clamp bounds of the dynamic gamma correction.
    """

    skip_std: float = 60.0
    skip_mean_low: float = 80.0
    skip_mean_high: float = 160.0
    gamma_min: float = 0.6
    gamma_max: float = 1.5
    target_mean: float = 128.0


@dataclass
class ReadingConfig:
    """
    Character assembly, tripwire and template recognizer settings.
    """

    tau: float = 0.2
    min_chars: int = 6
    line_overlap: float = 0.5
    dept_right_frac: float = 0.15
    dept_top_frac: float = 0.40
    min_height_frac: float = 0.3
    max_height_frac: float = 0.95
    max_aspect: float = 1.5
    score_floor: float = 0.2


@dataclass
class VlmConfig:
    """
    Vision-language-model endpoint settings.
    """

    endpoint: str = "http://localhost:11434/api/generate"
    model: str = "gemma3:4b"
    prompt: str = "Read plate. Alphanumeric only. No BOLIVIA."
    timeout_ms: int = 30000
    jpeg_quality: int = 90
    max_in_flight: int = 1


@dataclass
class StageToggles:
    """
    Switches used by the ablation grid.
    """

    rectify_on: bool = True
    photometric_on: bool = True
    vlm_on: bool = True
    fast_ocr_on: bool = True


@dataclass
class PipelineConfig:
    """
    Complete pipeline configuration, one attribute per INI section.
    """

    imaging: ImagingConfig = field(default_factory=ImagingConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    rectify: RectifyConfig = field(default_factory=RectifyConfig)
    photometric: PhotometricConfig = field(default_factory=PhotometricConfig)
    reading: ReadingConfig = field(default_factory=ReadingConfig)
    vlm: VlmConfig = field(default_factory=VlmConfig)
    stages: StageToggles = field(default_factory=StageToggles)

    def validate(self) -> "PipelineConfig":
        """
        Checks every threshold against its documented range.

        :return: (PipelineConfig) self, so calls can be chained.
        """

        checks = [
            (0.0 <= self.detection.conf_threshold <= 1.0, "detection.conf_threshold must be in [0, 1]"),
            (self.detection.pad_px >= 0, "detection.pad_px must be >= 0"),
            (0.0 < self.detection.min_inside <= 1.0, "detection.min_inside must be in (0, 1]"),
            (self.imaging.clahe_tiles >= 1, "imaging.clahe_tiles must be >= 1"),
            (self.imaging.clahe_clip > 0, "imaging.clahe_clip must be > 0"),
            (0 < self.imaging.canny_low < self.imaging.canny_high, "imaging.canny_low must be in (0, canny_high)"),
            (self.imaging.canny_high <= 255, "imaging.canny_high must be <= 255"),
            (self.imaging.approx_epsilon_frac > 0, "imaging.approx_epsilon_frac must be > 0"),
            (self.imaging.nlm_patch % 2 == 1 and self.imaging.nlm_search % 2 == 1,
             "imaging.nlm_patch and imaging.nlm_search must be odd"),
            (self.imaging.nlm_h > 0, "imaging.nlm_h must be > 0"),
            (self.rectify.severe_fr >= 1.0 and self.rectify.flat_fr >= 1.0, "rectify fr thresholds must be >= 1"),
            (0.0 <= self.rectify.flat_tilt <= 90.0 and 0.0 <= self.rectify.severe_tilt <= 90.0,
             "rectify tilt thresholds must be in [0, 90]"),
            (self.rectify.guardrail > 0, "rectify.guardrail must be > 0"),
            (0.0 <= self.rectify.min_quad_area < 1.0, "rectify.min_quad_area must be in [0, 1)"),
            (0.0 <= self.rectify.min_solidity <= 1.0, "rectify.min_solidity must be in [0, 1]"),
            (0.0 <= self.rectify.blob_area_min <= self.rectify.blob_area_max <= 1.0,
             "rectify blob area band must satisfy 0 <= min <= max <= 1"),
            (self.rectify.close_kernel_w % 2 == 1 and self.rectify.close_kernel_h % 2 == 1,
             "rectify closing kernel dimensions must be odd"),
            (0.0 <= self.photometric.skip_mean_low <= self.photometric.skip_mean_high <= 255.0,
             "photometric skip band must satisfy 0 <= low <= high <= 255"),
            (0.0 < self.photometric.gamma_min <= self.photometric.gamma_max, "photometric clamp must be 0 < min <= max"),
            (0.0 < self.photometric.target_mean < 255.0, "photometric.target_mean must be in (0, 255)"),
            (0.0 < self.reading.tau <= 1.0, "reading.tau must be in (0, 1]"),
            (self.reading.min_chars >= 0, "reading.min_chars must be >= 0"),
            (0.0 < self.reading.line_overlap <= 1.0, "reading.line_overlap must be in (0, 1]"),
            (0.0 < self.reading.min_height_frac < self.reading.max_height_frac <= 1.0,
             "reading height band must satisfy 0 < min < max <= 1"),
            (0.0 <= self.reading.score_floor < 1.0, "reading.score_floor must be in [0, 1)"),
            (self.vlm.timeout_ms > 0, "vlm.timeout_ms must be > 0"),
            (1 <= self.vlm.jpeg_quality <= 100, "vlm.jpeg_quality must be in [1, 100]"),
            (self.vlm.max_in_flight >= 1, "vlm.max_in_flight must be >= 1"),
            (self.stages.fast_ocr_on or self.stages.vlm_on, "at least one of stages.fast_ocr_on / stages.vlm_on"),
        ]
        for passed, message in checks:
            if not passed:
                raise ConfigError(message)

        return self


def _section_names() -> Dict[str, type]:
    return {f.name: f.default_factory for f in fields(PipelineConfig)}


def _coerce(raw: str, default: Any, key: str) -> Any:
    """
    Converts an INI string to the type of the field default.
    """

    try:
        if isinstance(default, bool):
            lowered = raw.strip().lower()
            if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.ConfigParser.BOOLEAN_STATES[lowered]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as err:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from err

    return raw


def apply_overrides(cfg: PipelineConfig, overrides: Mapping[str, Any]) -> PipelineConfig:
    """
    Returns a copy of the configuration with dotted ``section.key`` overrides applied.

    :param cfg: (PipelineConfig) Base configuration.
    :param overrides: (Mapping) Dotted keys to values; string values are parsed to the field's type.
    :return: (PipelineConfig) New validated configuration.
    """

    sections = {name: getattr(cfg, name) for name in _section_names()}
    for dotted, value in overrides.items():
        section, _, key = dotted.partition(".")
        if section not in sections or not key:
            raise ConfigError(f"Unknown configuration section in {dotted!r}")
        current = sections[section]
        if key not in {f.name for f in fields(current)}:
            raise ConfigError(f"Unknown configuration key {dotted!r}")
        default = getattr(current, key)
        if isinstance(value, str):
            value = _coerce(value, default, dotted)
        sections[section] = replace(current, **{key: value})

    return PipelineConfig(**sections).validate()


def load_config(path: Optional[str] = None, env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """
    Reads an INI file into a PipelineConfig.

    Missing sections and keys keep their defaults. The ``PLATELAB_VLM_ENDPOINT`` environment
    variable overrides ``vlm.endpoint``.

    :param path: (str) INI file path; None uses the built-in defaults.
    :param env: (Mapping) Environment to consult, defaults to ``os.environ``.
    :return: (PipelineConfig) Validated configuration.
    """

    env = os.environ if env is None else env
    overrides: Dict[str, Any] = {}

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
        for section in parser.sections():
            for key, raw in parser.items(section):
                overrides[f"{section}.{key}"] = raw
        log.debug("Loaded %d configuration keys from %s", len(overrides), path)

    if env.get(ENDPOINT_ENV_VAR):
        overrides["vlm.endpoint"] = env[ENDPOINT_ENV_VAR]

    return apply_overrides(PipelineConfig(), overrides)


def dump_config(cfg: PipelineConfig) -> str:
    """
    Serialises a configuration to INI text that load_config reads back unchanged.

    :param cfg: (PipelineConfig) Configuration to serialise.
    :return: (str) INI document.
    """

    parser = configparser.ConfigParser(interpolation=None)
    for name in _section_names():
        section = getattr(cfg, name)
        parser[name] = {f.name: _format_value(getattr(section, f.name)) for f in fields(section)}

    buffer = io.StringIO()
    parser.write(buffer)

    return buffer.getvalue()


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)

    return str(value)


def flatten_config(cfg: PipelineConfig) -> Dict[str, Any]:
    """
    Dotted ``section.key`` view of every setting.

    :param cfg: (PipelineConfig) Configuration.
    :return: (dict) Flat mapping.
    """

    flat = {}
    for name in _section_names():
        section = getattr(cfg, name)
        for f in fields(section):
            flat[f"{name}.{f.name}"] = getattr(section, f.name)

    return flat
