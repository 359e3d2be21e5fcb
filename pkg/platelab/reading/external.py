"""
Recogniser port backed by an external OCR runtime over the line-delimited JSON protocol.
"""

from typing import List, Sequence

from platelab.detection.base import Box
from platelab.detection.external import JsonLineProcess, reply_items
from platelab.exceptions import ExternalReplyError
from platelab.imaging.buffer import ImageBuffer
from platelab.reading.glyphs import CharDetection, GlyphClass, RecognizerPort


def parse_char(item, roi: ImageBuffer) -> CharDetection:
    """
    Converts one reply item into a CharDetection clipped to the ROI.

    :raises ExternalReplyError: Missing fields, a bad box or a glyph outside the 38 classes.
    """

    try:
        box = Box.from_sequence(item["box"])
        glyph = GlyphClass(str(item["glyph"]))
        confidence = float(item.get("confidence", 1.0))
    except (KeyError, TypeError, ValueError, AttributeError) as err:
        raise ExternalReplyError(f"Malformed character {item!r}: {err}") from err

    box = Box(max(0.0, box.x_min), max(0.0, box.y_min), min(float(roi.width), box.x_max),
              min(float(roi.height), box.y_max))

    return CharDetection(glyph, box, confidence)


class ExternalRecognizer(RecognizerPort):
    """
    Sends {"image": path} and expects {"chars": [{"glyph": "A", "box": [...], "confidence": c}, ...]}.

    Replies that break this shape, including glyph names outside the 38 classes, raise ExternalReplyError.
    """

    def __init__(self, command: Sequence[str]):
        self.process = JsonLineProcess(command)

    def recognize(self, roi: ImageBuffer) -> List[CharDetection]:
        reply = self.process.request_with_image(roi)

        return [parse_char(item, roi) for item in reply_items(reply, "chars")]

    def close(self) -> None:
        self.process.close()
