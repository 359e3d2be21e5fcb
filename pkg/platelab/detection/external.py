"""
Adapters for detector processes speaking line-delimited JSON over stdio.

Each request is one JSON line {"image": path, "threshold": t}; each reply is one JSON line with
detection lists whose items are either {"box": [x1, y1, x2, y2], "confidence": c, "label": name}
or bare [x1, y1, x2, y2, c] arrays.
"""

# Import Built-Ins
import json
import logging
import os
import subprocess
import tempfile
import threading
from typing import List, Optional, Sequence, Tuple

# Import Homebrew
from platelab.detection.base import Box, Detection, DetectorPort
from platelab.exceptions import ExternalReplyError, PlatelabError
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import write_image

# Init Logging Facilities
log = logging.getLogger(__name__)


class JsonLineProcess:
    """
    Long-running child process answering one JSON line per request line.

    Requests are serialised with a lock, so one instance may be shared between worker threads.
    """

    def __init__(self, command: Sequence[str]):
        """
        :param command: (list) Executable and arguments.
        """

        self.command = list(command)
        self._lock = threading.Lock()
        self._process: Optional[subprocess.Popen] = None

    def _ensure_started(self) -> subprocess.Popen:
        if self._process is None or self._process.poll() is not None:
            log.debug("Starting external process %s", self.command)
            self._process = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                             text=True, bufsize=1)
        return self._process

    def request(self, payload: dict) -> dict:
        """
        Sends one request line and reads one reply line.

        :param payload: (dict) JSON-serialisable request.
        :return: (dict) Parsed reply.
        """

        with self._lock:
            process = self._ensure_started()
            process.stdin.write(json.dumps(payload) + "\n")
            process.stdin.flush()
            line = process.stdout.readline()

        if not line:
            raise PlatelabError(f"External process {self.command} closed its output")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as err:
            raise PlatelabError(f"External process sent malformed JSON: {line[:80]!r}") from err
        if not isinstance(reply, dict):
            raise PlatelabError("External process reply must be a JSON object")

        return reply

    def request_with_image(self, image: ImageBuffer, **fields) -> dict:
        """
        Writes the image to a temporary PNG and sends its path with the extra fields.
        """

        handle, path = tempfile.mkstemp(suffix=".png", prefix="platelab_")
        os.close(handle)
        try:
            write_image(image, path)
            return self.request({"image": path, **fields})
        finally:
            os.unlink(path)

    def close(self) -> None:
        with self._lock:
            if self._process is not None:
                self._process.stdin.close()
                try:
                    self._process.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    self._process.kill()
                self._process = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def parse_detection(item, default_label: str) -> Detection:
    """
    Converts one reply item into a Detection.

    :raises ExternalReplyError: The item is neither a box object nor a box array.
    """

    try:
        if isinstance(item, dict):
            return Detection(str(item.get("label", default_label)), Box.from_sequence(item["box"]),
                             float(item.get("confidence", 1.0)))
        values = list(item)
        confidence = float(values[4]) if len(values) > 4 else 1.0
        return Detection(default_label, Box.from_sequence(values[:4]), confidence)
    except (KeyError, TypeError, ValueError, IndexError) as err:
        raise ExternalReplyError(f"Malformed {default_label} detection {item!r}: {err}") from err


def reply_items(reply: dict, key: str) -> list:
    items = reply.get(key, [])
    if not isinstance(items, list):
        raise ExternalReplyError(f"Reply field {key!r} must be a list, got {type(items).__name__}")
    return items


class ExternalDetector(DetectorPort):
    """
    Detector port backed by an external model runtime.
    """

    def __init__(self, command: Sequence[str]):
        self.process = JsonLineProcess(command)

    def detect(self, frame: ImageBuffer, conf_threshold: float) -> Tuple[List[Detection], List[Detection]]:
        reply = self.process.request_with_image(frame, threshold=conf_threshold)
        cars = [parse_detection(item, "car") for item in reply_items(reply, "cars")]
        plates = [parse_detection(item, "plate") for item in reply_items(reply, "plates")]

        return ([d for d in cars if d.confidence >= conf_threshold],
                [d for d in plates if d.confidence >= conf_threshold])

    def close(self) -> None:
        self.process.close()
