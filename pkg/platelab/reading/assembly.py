"""
Character assembly: ignored-class filtering, line grouping, department-code removal and the
confidence tripwire that routes a plate to the fallback reader.
"""

# Import Built-Ins
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

# Import Homebrew
from platelab.config import ReadingConfig
from platelab.reading.glyphs import CharDetection

# Init Logging Facilities
log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssembledText:
    """
    Ordered plate text with the confidence range of the characters that produced it.
    """

    text: str
    count: int
    min_conf: Optional[float] = None
    max_conf: Optional[float] = None
    dropped_department: Optional[CharDetection] = None
    chars: Tuple[CharDetection, ...] = ()

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "count": self.count,
            "min_conf": self.min_conf,
            "max_conf": self.max_conf,
            "dropped_department": self.dropped_department.glyph.value if self.dropped_department else None,
            "confidences": [c.confidence for c in self.chars],
        }


def filter_ignored(chars: Sequence[CharDetection]) -> List[CharDetection]:
    """
    Removes BOLIVIA and underscore detections, keeping the order of the rest.
    """

    return [c for c in chars if not c.glyph.is_ignored]


def vertical_overlap(a: CharDetection, b: CharDetection) -> float:
    """
    Vertical interval overlap divided by the shorter box height.
    """

    overlap = min(a.box.y_max, b.box.y_max) - max(a.box.y_min, b.box.y_min)

    return max(0.0, overlap) / min(a.box.height, b.box.height)


def _order_key(char: CharDetection):
    return (char.x_center, char.y_center, char.glyph.value, char.confidence, char.box.as_tuple())


def group_lines(chars: Sequence[CharDetection], min_overlap: float = 0.5) -> List[List[CharDetection]]:
    """
    Partitions detections into text lines.

    Two detections are linked when their vertical overlap is at least ``min_overlap`` of the shorter
    height; lines are the connected groups of that relation. Lines are sorted left to right inside and
    top to bottom by mean y-centre.

    :param chars: (list) Character detections.
    :param min_overlap: (float) Overlap share linking two detections.
    :return: (list) Lines of detections.
    """

    chars = sorted(chars, key=_order_key)
    parent = list(range(len(chars)))

    def find(index: int) -> int:
        while parent[index] != index:
            parent[index] = parent[parent[index]]
            index = parent[index]
        return index

    for i in range(len(chars)):
        for j in range(i + 1, len(chars)):
            if vertical_overlap(chars[i], chars[j]) >= min_overlap:
                parent[find(i)] = find(j)

    groups = {}
    for index, char in enumerate(chars):
        groups.setdefault(find(index), []).append(char)

    lines = [sorted(group, key=_order_key) for group in groups.values()]
    lines.sort(key=lambda line: (sum(c.y_center for c in line) / len(line), _order_key(line[0])))

    return lines


def strip_department_code(lines: Sequence[Sequence[CharDetection]], roi_w: float, roi_h: float,
                          right_frac: float = 0.15,
                          top_frac: float = 0.40) -> Tuple[List[CharDetection], Optional[CharDetection]]:
    """
    Picks the main line and drops a trailing department letter from it.

    The main line has the most characters, the bottommost winning ties. Its last character is dropped if it
    is a letter centred in the rightmost ``right_frac`` of the ROI and the top ``top_frac``.

    :param lines: (list) Lines from group_lines, at least one.
    :param roi_w: (float) ROI width.
    :param roi_h: (float) ROI height.
    :param right_frac: (float) Width share of the department zone.
    :param top_frac: (float) Height share of the department zone.
    :return: (tuple) Main line and the dropped detection, if any.
    """

    if not lines:
        raise ValueError("strip_department_code needs at least one line")

    # lines are sorted top to bottom, so the last maximal line is the bottommost
    main = list(lines[0])
    for line in lines[1:]:
        if len(line) >= len(main):
            main = list(line)

    last = main[-1] if main else None
    if (last is not None and last.glyph.is_letter and last.x_center >= (1.0 - right_frac) * roi_w
            and last.y_center <= top_frac * roi_h):
        return main[:-1], last

    return main, None


def assemble(chars: Sequence[CharDetection], roi_w: float, roi_h: float,
             cfg: Optional[ReadingConfig] = None) -> AssembledText:
    """
    Filters, groups, strips the department code and concatenates the main line.

    :param chars: (list) Raw recogniser output.
    :param roi_w: (float) ROI width.
    :param roi_h: (float) ROI height.
    :param cfg: (ReadingConfig) Overlap and department-zone settings.
    :return: (AssembledText) Text and confidence summary of the emitted characters.
    """

    cfg = cfg or ReadingConfig()
    kept = filter_ignored(chars)
    if not kept:
        return AssembledText("", 0)

    lines = group_lines(kept, cfg.line_overlap)
    main, dropped = strip_department_code(lines, roi_w, roi_h, cfg.dept_right_frac, cfg.dept_top_frac)
    if not main:
        return AssembledText("", 0, dropped_department=dropped)

    confidences = [c.confidence for c in main]

    return AssembledText("".join(c.glyph.value for c in main), len(main), min(confidences), max(confidences),
                         dropped, tuple(main))


def tripwire(assembled: AssembledText, tau: float = 0.2, min_chars: int = 6) -> bool:
    """
    Whether the fast-path read is too short or too uneven to trust.

    :param assembled: (AssembledText) Fast-path result.
    :param tau: (float) Minimum min/max confidence ratio, in (0, 1].
    :param min_chars: (int) Minimum character count.
    :return: (bool) True if the fallback reader should be consulted.
    """

    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    if min_chars < 0:
        raise ValueError(f"min_chars must be >= 0, got {min_chars}")

    if assembled.count < min_chars:
        return True
    if assembled.count > 0 and assembled.max_conf > 0:
        return assembled.min_conf / assembled.max_conf < tau

    return assembled.count > 0
