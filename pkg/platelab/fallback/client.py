"""
Vision-language-model fallback reader.

The ROI is JPEG encoded and posted to a local model server as
{"model": name, "prompt": text, "images": [base64 jpeg], "stream": false}; the answer is read from the
"response" field of the JSON reply and sanitised.
"""

# Import Built-Ins
import base64
import logging
import threading
import time
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

# Import Third-Party
import numpy as np
import requests

# Import Homebrew
from platelab.config import VlmConfig
from platelab.fallback.sanitize import sanitize
from platelab.imaging.buffer import ImageBuffer
from platelab.imaging.io import encode_jpeg

# Init Logging Facilities
log = logging.getLogger(__name__)

PLATE_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class VlmRequest:
    prompt: str
    image_jpeg: bytes
    model_name: str
    timeout_ms: int

    def __post_init__(self):
        if not self.image_jpeg:
            raise ValueError("VLM request needs a non-empty image")
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be > 0, got {self.timeout_ms}")

    def to_payload(self) -> dict:
        return {
            "model": self.model_name,
            "prompt": self.prompt,
            "images": [base64.b64encode(self.image_jpeg).decode("ascii")],
            "stream": False,
        }


@dataclass(frozen=True)
class VlmResult:
    """
    Model answer; a failed result carries a reason and an empty sanitised text.
    """

    raw_text: str
    sanitized: str
    latency_ms: float
    failed: bool = False
    reason: Optional[str] = None

    @classmethod
    def failure(cls, reason: str, latency_ms: float) -> "VlmResult":
        return cls("", "", latency_ms, True, reason)

    @classmethod
    def from_raw(cls, raw_text: str, latency_ms: float) -> "VlmResult":
        return cls(raw_text, sanitize(raw_text), latency_ms)

    def to_dict(self) -> dict:
        return {"raw_text": self.raw_text, "sanitized": self.sanitized, "latency_ms": self.latency_ms,
                "failed": self.failed, "reason": self.reason}


class VlmPort(ABC):
    """
    Fallback reader consulted when the fast path is not trusted.
    """

    @abstractmethod
    def query(self, roi: ImageBuffer) -> VlmResult:
        """
        :param roi: (ImageBuffer) Optimised plate ROI.
        :return: (VlmResult) Answer or failure; never raises for transport problems.
        """

        raise NotImplementedError


def query_vlm(roi: ImageBuffer, endpoint: str, cfg: Optional[VlmConfig] = None,
              session: Optional[requests.Session] = None) -> VlmResult:
    """
    Posts the JPEG-encoded ROI to the model endpoint and sanitises the answer.

    :param roi: (ImageBuffer) Plate ROI.
    :param endpoint: (str) URL of the generate endpoint.
    :param cfg: (VlmConfig) Model, prompt, timeout and JPEG quality.
    :param session: (requests.Session) Optional session for connection reuse.
    :return: (VlmResult) Sanitised answer, or a failed result with reason timeout, connection,
        http <status> or malformed response.
    """

    cfg = cfg or VlmConfig()
    request = VlmRequest(cfg.prompt, encode_jpeg(roi, cfg.jpeg_quality), cfg.model, cfg.timeout_ms)
    poster = session or requests
    start = time.perf_counter()

    def elapsed() -> float:
        return (time.perf_counter() - start) * 1000.0

    try:
        response = poster.post(endpoint, json=request.to_payload(), timeout=cfg.timeout_ms / 1000.0)
        response.raise_for_status()
        raw_text = response.json()["response"]
        if not isinstance(raw_text, str):
            raise TypeError("response field is not a string")
    except requests.Timeout:
        log.warning("VLM request to %s timed out after %.0f ms", endpoint, elapsed())
        return VlmResult.failure("timeout", elapsed())
    except requests.ConnectionError as err:
        log.warning("VLM endpoint %s unreachable: %s", endpoint, err)
        return VlmResult.failure("connection", elapsed())
    except requests.HTTPError as err:
        status = err.response.status_code if err.response is not None else "?"
        log.warning("VLM endpoint %s answered HTTP %s", endpoint, status)
        return VlmResult.failure(f"http {status}", elapsed())
    except (ValueError, KeyError, TypeError) as err:
        log.warning("VLM endpoint %s sent a malformed response: %s", endpoint, err)
        return VlmResult.failure("malformed response", elapsed())

    result = VlmResult.from_raw(raw_text, elapsed())
    log.debug("VLM answered %r -> %r in %.1f ms", raw_text, result.sanitized, result.latency_ms)

    return result


class HttpVlmClient(VlmPort):
    """
    HTTP fallback reader limiting the number of requests in flight.
    """

    def __init__(self, cfg: Optional[VlmConfig] = None, endpoint: Optional[str] = None):
        """
        :param cfg: (VlmConfig) Endpoint settings; ``max_in_flight`` bounds concurrent requests.
        :param endpoint: (str) Overrides ``cfg.endpoint``.
        """

        self.cfg = cfg or VlmConfig()
        self.endpoint = endpoint or self.cfg.endpoint
        self._slots = threading.BoundedSemaphore(self.cfg.max_in_flight)

    def query(self, roi: ImageBuffer) -> VlmResult:
        with self._slots:
            return query_vlm(roi, self.endpoint, self.cfg)


def corrupt_plate(plate: str, rng: np.random.Generator) -> str:
    """
    Replaces one character of the plate with a different character of the plate alphabet.
    """

    if not plate:
        return rng.choice(list(PLATE_ALPHABET))
    position = int(rng.integers(len(plate)))
    choices = [c for c in PLATE_ALPHABET if c != plate[position]]

    return plate[:position] + str(rng.choice(choices)) + plate[position + 1:]


class OracleVlm(VlmPort):
    """
    In-process reader that knows the ground truth and answers it correctly with probability ``fidelity``,
    otherwise with a single-character corruption. Deterministic for a given (seed, plate).
    """

    def __init__(self, plate: str, fidelity: float = 0.9, seed: int = 0):
        if not 0.0 <= fidelity <= 1.0:
            raise ValueError(f"fidelity must be in [0, 1], got {fidelity}")
        self.plate = plate
        self.fidelity = fidelity
        self.seed = seed

    def query(self, roi: ImageBuffer) -> VlmResult:
        rng = np.random.default_rng([self.seed, zlib.crc32(self.plate.encode("utf-8"))])
        answer = self.plate if rng.random() < self.fidelity else corrupt_plate(self.plate, rng)

        return VlmResult.from_raw(f"The plate reads {answer}.", 0.0)
