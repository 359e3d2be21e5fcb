"""
Local stand-in for the model server, speaking the same generate protocol.

Answers are looked up by the SHA-256 of the decoded JPEG payload; unknown images get the default answer.
"""

# Import Built-Ins
import base64
import hashlib
import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, Optional

# Init Logging Facilities
log = logging.getLogger(__name__)


def payload_key(image_jpeg: bytes) -> str:
    return hashlib.sha256(image_jpeg).hexdigest()


class _GenerateHandler(BaseHTTPRequestHandler):
    server: "_MockHttpServer"

    def log_message(self, fmt, *args):
        log.debug("mock-vlm %s", fmt % args)

    def _reply(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        owner = self.server.owner
        owner._count_request()
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length))
            image = base64.b64decode(payload["images"][0])
        except (ValueError, KeyError, IndexError, TypeError):
            self._reply(400, b'{"error": "bad request"}')
            return

        if owner.delay_s > 0:
            time.sleep(owner.delay_s)
        if owner.status != 200:
            self._reply(owner.status, b'{"error": "configured failure"}')
            return
        if owner.malformed:
            self._reply(200, b"not json", "text/plain")
            return

        answer = owner.responses.get(payload_key(image), owner.default_response)
        body = json.dumps({"model": payload.get("model", ""), "response": answer, "done": True})
        self._reply(200, body.encode("utf-8"))


class _MockHttpServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, owner: "MockVlmServer"):
        super().__init__(address, _GenerateHandler)
        self.owner = owner


class MockVlmServer:
    """
    Threaded HTTP server with canned answers.

    Use as a context manager; ``endpoint`` is valid once started.
    """

    def __init__(self, responses: Optional[Dict[str, str]] = None, default_response: str = "",
                 delay_ms: float = 0.0, status: int = 200, malformed: bool = False,
                 host: str = "127.0.0.1", port: int = 0):
        """
        :param responses: (dict) SHA-256 hex digest of JPEG bytes to raw answer text.
        :param default_response: (str) Answer for images without a canned response.
        :param delay_ms: (float) Artificial latency per request.
        :param status: (int) HTTP status to answer with; non-200 simulates server errors.
        :param malformed: (bool) Answer 200 with a non-JSON body.
        :param host: (str) Bind address.
        :param port: (int) Bind port, 0 picks a free one.
        """

        self.responses = dict(responses or {})
        self.default_response = default_response
        self.delay_s = delay_ms / 1000.0
        self.status = status
        self.malformed = malformed
        self._address = (host, port)
        self._server: Optional[_MockHttpServer] = None
        self._thread: Optional[threading.Thread] = None
        self._lock = threading.Lock()
        self._requests = 0

    def _count_request(self) -> None:
        with self._lock:
            self._requests += 1

    @property
    def request_count(self) -> int:
        with self._lock:
            return self._requests

    def add_response(self, image_jpeg: bytes, answer: str) -> None:
        self.responses[payload_key(image_jpeg)] = answer

    @property
    def endpoint(self) -> str:
        if self._server is None:
            raise RuntimeError("Mock VLM server is not running")
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/api/generate"

    def start(self) -> "MockVlmServer":
        self._server = _MockHttpServer(self._address, self)
        self._thread = threading.Thread(target=self._server.serve_forever, name="mock-vlm", daemon=True)
        self._thread.start()
        log.info("Mock VLM server listening on %s", self.endpoint)
        return self

    def serve_forever(self) -> None:
        """
        Blocks in the foreground until interrupted.
        """

        self._server = _MockHttpServer(self._address, self)
        log.info("Mock VLM server listening on %s", self.endpoint)
        try:
            self._server.serve_forever()
        except KeyboardInterrupt:
            log.info("Mock VLM server interrupted")
        finally:
            self._server.server_close()
            self._server = None

    def stop(self) -> None:
        if self._server is None:
            return
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self._server = None
        self._thread = None

    def __enter__(self) -> "MockVlmServer":
        return self.start()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.stop()
