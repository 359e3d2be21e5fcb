# Import Built-Ins
import base64
import logging
import random
from unittest import TestCase

# Import Third-Party
import numpy as np
import requests

# Import Homebrew
from platelab.config import VlmConfig
from platelab.evaluation.metrics import levenshtein
from platelab.fallback import (PLATE_PATTERN, HttpVlmClient, MockVlmServer, OracleVlm, VlmRequest, VlmResult,
                               corrupt_plate, payload_key, query_vlm, sanitize)
from platelab.imaging import ImageBuffer, decode_image, encode_jpeg

# Init Logging Facilities
log = logging.getLogger(__name__)

CHATTER = ["The plate is {}.", "Sure! I can see {} on the car", "plate: {}", "{}", "Reading... {} (bolivia)",
           "BOLIVIA {} L", "It looks like '{}', although the image is blurry"]


def _roi(seed=0):
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.integers(0, 256, size=(40, 120, 3), dtype=np.uint8))


class SanitizeTests(TestCase):

    def test_sanitize_examples_works(self):
        self.assertEqual(sanitize("1234ABC"), "1234ABC")
        self.assertEqual(sanitize("Plate: 987-XYZ ... bolivia"), "987XYZ")
        self.assertEqual(sanitize(""), "")
        self.assertEqual(sanitize("The plate is 1234ABC."), "1234ABC")
        self.assertEqual(sanitize("BOLIVIA 2345KHD L"), "2345KHD")
        self.assertEqual(sanitize("2345KHDL"), "2345KHD")
        self.assertEqual(sanitize("no plate here"), "NOPLATEHERE")

        # Assert that a country word rebuilt by stripping is removed as well
        self.assertEqual(sanitize("boli-via"), "")

    def test_sanitize_properties_works(self):
        rng = random.Random(5)
        alphabet = "0123456789abcxyzABCXYZ -.:!'BOLIVIAbolivia"
        for _ in range(2000):
            raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 24)))
            if rng.random() < 0.3:
                raw = raw[:5] + "bolivia" + raw[5:]
            once = sanitize(raw)
            self.assertEqual(sanitize(once), once, msg=raw)
            self.assertNotIn("BOLIVIA", once)
            self.assertTrue(all(c.isdigit() or ("A" <= c <= "Z") for c in once), msg=once)

    def test_plate_in_chatter_is_found_works(self):
        rng = random.Random(8)
        for _ in range(300):
            plate = ("".join(rng.choice("0123456789") for _ in range(rng.choice((3, 4))))
                     + "".join(rng.choice("ABCDEFGHJKLMNPRSTUVWXYZ") for _ in range(3)))
            self.assertTrue(PLATE_PATTERN.fullmatch(plate))
            for template in CHATTER:
                self.assertEqual(sanitize(template.format(plate)), plate, msg=template)


class VlmTypesTests(TestCase):

    def test_request_validation_works(self):
        with self.assertRaises(ValueError):
            VlmRequest("prompt", b"", "model", 100)
        with self.assertRaises(ValueError):
            VlmRequest("prompt", b"jpeg", "model", 0)

        payload = VlmRequest("Read plate.", b"\xff\xd8jpeg", "gemma3:4b", 1000).to_payload()
        self.assertEqual(payload["model"], "gemma3:4b")
        self.assertEqual(payload["stream"], False)
        self.assertEqual(base64.b64decode(payload["images"][0]), b"\xff\xd8jpeg")

    def test_result_constructors_works(self):
        failed = VlmResult.failure("timeout", 12.0)
        self.assertTrue(failed.failed)
        self.assertEqual(failed.sanitized, "")
        result = VlmResult.from_raw("plate 123ABC", 3.0)
        self.assertEqual(result.sanitized, "123ABC")
        self.assertEqual(result.to_dict()["reason"], None)

    def test_jpeg_encoding_works(self):
        roi = _roi()
        jpeg = encode_jpeg(roi, 90)
        self.assertEqual(jpeg[:2], b"\xff\xd8")
        self.assertEqual(jpeg, encode_jpeg(roi, 90))
        decoded = decode_image(jpeg)
        self.assertEqual((decoded.width, decoded.height, decoded.channels), (120, 40, 3))


class MockServerTests(TestCase):

    def test_canned_answer_works(self):
        roi = _roi(1)
        with MockVlmServer(default_response="The plate is 1234ABC.") as server:
            server.add_response(encode_jpeg(roi, 90), "BOLIVIA 2345KHD L")
            answer = query_vlm(roi, server.endpoint, VlmConfig())
            other = query_vlm(_roi(2), server.endpoint)
            self.assertEqual(server.request_count, 2)

        self.assertFalse(answer.failed)
        self.assertEqual(answer.raw_text, "BOLIVIA 2345KHD L")
        self.assertEqual(answer.sanitized, "2345KHD")
        self.assertGreaterEqual(answer.latency_ms, 0.0)
        self.assertEqual(other.sanitized, "1234ABC")
        self.assertEqual(payload_key(b"abc"), payload_key(b"abc"))

    def test_timeout_works(self):
        with MockVlmServer(default_response="1234ABC", delay_ms=600) as server:
            answer = query_vlm(_roi(), server.endpoint, VlmConfig(timeout_ms=100))
        self.assertTrue(answer.failed)
        self.assertEqual(answer.reason, "timeout")
        self.assertEqual(answer.sanitized, "")

    def test_connection_refused_works(self):
        server = MockVlmServer().start()
        endpoint = server.endpoint
        server.stop()
        answer = query_vlm(_roi(), endpoint, VlmConfig(timeout_ms=2000))
        self.assertTrue(answer.failed)
        self.assertEqual(answer.reason, "connection")

    def test_server_errors_works(self):
        with MockVlmServer(status=500) as server:
            self.assertEqual(query_vlm(_roi(), server.endpoint).reason, "http 500")
        with MockVlmServer(malformed=True) as server:
            self.assertEqual(query_vlm(_roi(), server.endpoint).reason, "malformed response")
        with MockVlmServer() as server:
            reply = requests.post(server.endpoint, json={"model": "x"}, timeout=5)
            self.assertEqual(reply.status_code, 400)
        with self.assertRaises(RuntimeError):
            MockVlmServer().endpoint

    def test_http_client_works(self):
        with MockVlmServer(default_response="567XYZ") as server:
            client = HttpVlmClient(VlmConfig(max_in_flight=2), endpoint=server.endpoint)
            self.assertEqual(client.endpoint, server.endpoint)
            self.assertEqual([client.query(_roi(i)).sanitized for i in range(3)], ["567XYZ"] * 3)
            self.assertEqual(server.request_count, 3)

        self.assertEqual(HttpVlmClient(VlmConfig(endpoint="http://example.invalid/api")).endpoint,
                         "http://example.invalid/api")


class OracleVlmTests(TestCase):

    def test_oracle_fidelity_works(self):
        self.assertEqual(OracleVlm("1234ABC", fidelity=1.0).query(_roi()).sanitized, "1234ABC")

        raw = OracleVlm("1234ABC", fidelity=0.0, seed=3).query(_roi()).raw_text
        self.assertTrue(raw.startswith("The plate reads ") and raw.endswith("."))
        wrong = raw[len("The plate reads "):-1]
        self.assertEqual(len(wrong), 7)
        self.assertEqual(levenshtein(wrong, "1234ABC"), 1)

        # Assert that answers depend on the seed and plate only
        first = OracleVlm("567XYZ", fidelity=0.5, seed=11)
        second = OracleVlm("567XYZ", fidelity=0.5, seed=11)
        self.assertEqual(first.query(_roi(1)), second.query(_roi(2)))

        with self.assertRaises(ValueError):
            OracleVlm("1234ABC", fidelity=1.5)

    def test_corrupt_plate_works(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            corrupted = corrupt_plate("2345KHD", rng)
            self.assertEqual(sum(a != b for a, b in zip(corrupted, "2345KHD")), 1)
        self.assertEqual(len(corrupt_plate("", rng)), 1)
