# Import Built-Ins
import io
import json
import logging
import sys
import tempfile
import threading
from pathlib import Path
from typing import List
from unittest import TestCase

# Import Third-Party
import numpy as np

# Import Homebrew
from platelab.config import PipelineConfig, VlmConfig, apply_overrides
from platelab.detection import AnnotationRecord, Box, ExternalDetector, FixtureDetector, WholeFrameDetector
from platelab.fallback import HttpVlmClient, MockVlmServer, OracleVlm
from platelab.imaging import ImageBuffer, write_image
from platelab.pipeline import (STAGES, BatchItem, ReadingRoute, StageClock, frame_to_record, process_batch,
                               process_frame, process_frame_all, reading_to_record, write_trace)
from platelab.reading import CharDetection, RecognizerPort, TemplateRecognizer
from platelab.synth import PlateSpec, SceneSpec, compose_scene, render_plate

# Init Logging Facilities
log = logging.getLogger(__name__)

CAR = Box(0.0, 0.0, 320.0, 200.0)
PLATE = Box(100.0, 80.0, 220.0, 120.0)

# Replies with a car that has no box.
BOXLESS_DETECTOR = """
import json, sys
for line in sys.stdin:
    print(json.dumps({"cars": [{"confidence": 0.9}], "plates": []}), flush=True)
"""


class FixedRecognizer(RecognizerPort):
    """
    Reports the same glyphs for every ROI and counts its calls.
    """

    def __init__(self, text: str, confidence: float = 0.9):
        self.text = text
        self.confidence = confidence
        self.calls = 0
        self._lock = threading.Lock()

    def recognize(self, roi: ImageBuffer) -> List[CharDetection]:
        with self._lock:
            self.calls += 1
        return [CharDetection(char, Box(10.0 + 14 * i, 10.0, 22.0 + 14 * i, 30.0), self.confidence)
                for i, char in enumerate(self.text)]


def _flat_frame(level: int = 128) -> ImageBuffer:
    return ImageBuffer(np.full((200, 320, 3), level, dtype=np.uint8))


def _detector(frames, plates=(PLATE,)) -> FixtureDetector:
    return FixtureDetector.from_pairs([(frame, AnnotationRecord(f"f{i}", [CAR], list(plates)))
                                       for i, frame in enumerate(frames)])


def _config(**overrides) -> PipelineConfig:
    return apply_overrides(PipelineConfig(), overrides)


class RoutingTests(TestCase):

    def test_no_valid_plate_works(self):
        frame = _flat_frame()
        self.assertIsNone(process_frame(frame, _detector([frame], plates=()), FixedRecognizer("1234ABC"),
                                        vlm=OracleVlm("1234ABC")))

        # Assert that a plate outside every car is discarded
        outside = _detector([frame], plates=(Box(300.0, 190.0, 400.0, 240.0),))
        self.assertIsNone(process_frame(frame, outside, FixedRecognizer("1234ABC"), vlm=OracleVlm("1234ABC")))

    def test_missing_ports_raise_works(self):
        frame = _flat_frame()
        with self.assertRaises(ValueError):
            process_frame(frame, _detector([frame]), FixedRecognizer("1234ABC"))
        with self.assertRaises(ValueError):
            process_frame(frame, _detector([frame]), None, _config(**{"stages.vlm_on": False}))

    def test_fast_path_skips_vlm_works(self):
        frame = _flat_frame()
        with MockVlmServer(default_response="999ZZZ") as server:
            reading = process_frame(frame, _detector([frame]), FixedRecognizer("1234ABC"),
                                    vlm=HttpVlmClient(endpoint=server.endpoint))
            self.assertEqual(server.request_count, 0)

        self.assertEqual(reading.route, ReadingRoute.FAST_PATH)
        self.assertEqual(reading.text, "1234ABC")
        self.assertIsNone(reading.vlm)
        self.assertFalse(reading.used_vlm)
        self.assertEqual(reading.timings["vlm"], 0.0)

    def test_short_read_falls_back_works(self):
        frame = _flat_frame()
        with MockVlmServer(default_response="The plate is 1234ABC.") as server:
            reading = process_frame(frame, _detector([frame]), FixedRecognizer("12345"),
                                    vlm=HttpVlmClient(endpoint=server.endpoint))
            self.assertEqual(server.request_count, 1)

        self.assertEqual(reading.route, ReadingRoute.VLM_FALLBACK)
        self.assertEqual(reading.assembled.text, "12345")
        self.assertEqual(reading.text, "1234ABC")
        self.assertTrue(reading.used_vlm)

    def test_low_confidence_falls_back_works(self):
        frame = _flat_frame()
        reading = process_frame(frame, _detector([frame]), FixedRecognizer("1234ABC", confidence=0.1),
                                vlm=OracleVlm("567XYZ", fidelity=1.0))
        self.assertEqual(reading.route, ReadingRoute.VLM_FALLBACK)
        self.assertEqual(reading.text, "567XYZ")

    def test_vlm_failure_keeps_fast_text_works(self):
        frame = _flat_frame()
        with MockVlmServer(status=500) as server:
            reading = process_frame(frame, _detector([frame]), FixedRecognizer("12345"),
                                    vlm=HttpVlmClient(endpoint=server.endpoint))
        self.assertEqual(reading.route, ReadingRoute.VLM_FALLBACK)
        self.assertEqual(reading.text, "12345")
        self.assertTrue(reading.vlm.failed)
        self.assertEqual(reading.vlm.reason, "http 500")

        with MockVlmServer(default_response="1234ABC", delay_ms=600) as server:
            client = HttpVlmClient(VlmConfig(timeout_ms=100), endpoint=server.endpoint)
            reading = process_frame(frame, _detector([frame]), FixedRecognizer("12345"), vlm=client)
        self.assertEqual(reading.vlm.reason, "timeout")
        self.assertEqual(reading.text, "12345")

    def test_forced_vlm_skips_recognizer_works(self):
        frame = _flat_frame()
        recognizer = FixedRecognizer("1234ABC")
        reading = process_frame(frame, _detector([frame]), recognizer, _config(**{"stages.fast_ocr_on": False}),
                                vlm=OracleVlm("567XYZ", fidelity=1.0))
        self.assertEqual(recognizer.calls, 0)
        self.assertEqual(reading.route, ReadingRoute.VLM_FORCED)
        self.assertIsNone(reading.assembled)
        self.assertEqual(reading.text, "567XYZ")
        self.assertEqual(reading.timings["ocr"], 0.0)

    def test_vlm_off_keeps_short_read_works(self):
        frame = _flat_frame()
        reading = process_frame(frame, _detector([frame]), FixedRecognizer("12345"), _config(**{"stages.vlm_on": False}))
        self.assertEqual(reading.route, ReadingRoute.FAST_PATH)
        self.assertEqual(reading.text, "12345")


class StageToggleTests(TestCase):

    def test_timings_works(self):
        frame = _flat_frame()
        reading = process_frame(frame, _detector([frame]), FixedRecognizer("12345"), vlm=OracleVlm("1234ABC"))

        # Assert that every stage has a timing and the total covers the stages
        self.assertEqual(set(reading.timings), set(STAGES))
        self.assertTrue(all(value >= 0.0 for value in reading.timings.values()))
        staged = sum(reading.timings[stage] for stage in STAGES if stage != "total")
        self.assertGreaterEqual(reading.timings["total"] + 1e-6, staged)

        clock = StageClock()
        with clock.measure("ocr"):
            pass
        self.assertGreaterEqual(clock.timings["ocr"], 0.0)
        self.assertEqual(clock.timings["vlm"], 0.0)

    def test_disabled_stages_leave_no_evidence_works(self):
        frame = _flat_frame(40)
        cfg = _config(**{"stages.rectify_on": False, "stages.photometric_on": False})
        reading = process_frame(frame, _detector([frame]), FixedRecognizer("1234ABC"), cfg, OracleVlm("1234ABC"))

        self.assertIsNone(reading.rectification)
        self.assertIsNone(reading.rectify_route)
        self.assertIsNone(reading.gamma)
        self.assertEqual(reading.timings["rectify"], 0.0)
        self.assertEqual(reading.timings["photometric"], 0.0)

        record = reading_to_record(reading)
        for key in ("rectify_route", "rectification", "gamma", "vlm"):
            self.assertNotIn(key, record)
        self.assertEqual(record["assembled"]["text"], "1234ABC")

    def test_enabled_stages_are_recorded_works(self):
        frame = _flat_frame(40)
        reading = process_frame(frame, _detector([frame]), FixedRecognizer("1234ABC"), vlm=OracleVlm("1234ABC"))

        # Assert that a flat ROI passes through and a dark one is brightened
        self.assertEqual(reading.rectify_route.value, "PassThrough")
        self.assertFalse(reading.gamma.skipped)
        self.assertLess(reading.gamma.gamma_clamped, 1.0)

        record = reading_to_record(reading, include_timings=False)
        self.assertEqual(record["rectify_route"], "PassThrough")
        self.assertEqual(set(record["timings"].values()), {0.0})


class MultiPlateTests(TestCase):

    def test_all_plates_are_sorted_works(self):
        frame = _flat_frame()
        second = Box(20.0, 140.0, 140.0, 180.0)
        detector = _detector([frame], plates=(PLATE, second))
        readings = process_frame_all(frame, detector, FixedRecognizer("1234ABC"), vlm=OracleVlm("1234ABC"))

        self.assertEqual(len(readings), 2)
        confidences = [r.source_box.confidence for r in readings]
        self.assertEqual(confidences, sorted(confidences, reverse=True))

        # Assert that the single-plate mode returns the most confident plate
        best = process_frame(frame, detector, FixedRecognizer("1234ABC"), vlm=OracleVlm("1234ABC"))
        self.assertEqual(best.source_box, readings[0].source_box)


class BatchTests(TestCase):

    def setUp(self):
        self.frames = [_flat_frame(level) for level in (30, 60, 100, 128, 170, 210, 240, 90)]
        self.plates = ["1234ABC", "567XYZ", "8901KLM", "234DEF", "4321GHJ", "765PQR", "1111STU", "999VWX"]
        self.detector = _detector(self.frames)

    def _items(self):
        return [BatchItem(frame, f"frame{i}", OracleVlm(plate, fidelity=1.0))
                for i, (frame, plate) in enumerate(zip(self.frames, self.plates))]

    def test_batch_order_and_worker_independence_works(self):
        serial = process_batch(self._items(), self.detector, FixedRecognizer("12345"), workers=1)
        parallel = process_batch(self._items(), self.detector, FixedRecognizer("12345"), workers=8)

        self.assertEqual([r.source for r in serial], [f"frame{i}" for i in range(8)])
        self.assertEqual([r.reading.text for r in serial], self.plates)
        self.assertEqual([r.reading.text for r in parallel], self.plates)

        # Assert that traces without timings are byte-identical across worker counts
        first, second = io.StringIO(), io.StringIO()
        self.assertEqual(write_trace(serial, first, include_timings=False), 8)
        write_trace(parallel, second, include_timings=False)
        self.assertEqual(first.getvalue(), second.getvalue())

    def test_vlm_calls_match_fallback_routes_works(self):
        recognizer = FixedRecognizer("1234ABC")
        with MockVlmServer(default_response="567XYZ") as server:
            results = process_batch(self.frames, self.detector, recognizer,
                                    vlm=HttpVlmClient(endpoint=server.endpoint), workers=4)
            self.assertEqual(server.request_count, sum(r.reading.used_vlm for r in results))
        self.assertEqual(recognizer.calls, 8)

    def test_empty_and_invalid_manifests_works(self):
        self.assertEqual(process_batch([], self.detector, FixedRecognizer("1234ABC"), vlm=OracleVlm("")), [])
        with self.assertRaises(ValueError):
            process_batch(self.frames, self.detector, FixedRecognizer("1234ABC"), vlm=OracleVlm(""), workers=0)

    def test_bad_frames_are_reported_works(self):
        with tempfile.TemporaryDirectory() as tmp:
            good = Path(tmp) / "good.png"
            write_image(self.frames[0], good)
            bad = Path(tmp) / "bad.png"
            bad.write_bytes(b"definitely not an image")
            unknown = Path(tmp) / "unknown.png"
            write_image(_flat_frame(7), unknown)
            missing = Path(tmp) / "missing.png"

            seen = []
            results = process_batch([good, bad, missing, unknown], self.detector, FixedRecognizer("1234ABC"),
                                    vlm=OracleVlm("1234ABC"), workers=2, on_result=seen.append)

        self.assertEqual([r.failed for r in results], [False, True, True, True])
        self.assertEqual(seen, results)
        self.assertIn("ImageFormatError", results[1].error)
        self.assertIn("AnnotationError", results[3].error)
        self.assertEqual(results[0].reading.text, "1234ABC")

    def test_malformed_detector_reply_is_reported_works(self):
        detector = ExternalDetector([sys.executable, "-c", BOXLESS_DETECTOR])
        try:
            results = process_batch(self.frames[:2], detector, FixedRecognizer("1234ABC"), vlm=OracleVlm(""),
                                    workers=2)
        finally:
            detector.close()

        # Assert that each frame carries its own error instead of aborting the batch
        self.assertEqual(len(results), 2)
        self.assertTrue(all(r.failed for r in results))
        self.assertTrue(all("ExternalReplyError" in r.error for r in results))

    def test_unexpected_errors_are_reported_works(self):
        class FirstCallFails(FixedRecognizer):
            def recognize(self, roi):
                chars = super().recognize(roi)
                if self.calls == 1:
                    raise RuntimeError("recogniser crashed")
                return chars

        results = process_batch(self.frames[:3], self.detector, FirstCallFails("1234ABC"),
                                vlm=OracleVlm("1234ABC"), workers=1)
        self.assertEqual([r.failed for r in results], [True, False, False])
        self.assertEqual(results[0].error, "RuntimeError: recogniser crashed")
        self.assertEqual([r.reading.text for r in results[1:]], ["1234ABC", "1234ABC"])

    def test_trace_records_works(self):
        frame = _flat_frame()
        no_plate = _detector([frame], plates=())
        results = process_batch([BatchItem(frame, "empty")], no_plate, FixedRecognizer("1234ABC"),
                                vlm=OracleVlm("1234ABC"))
        self.assertEqual(frame_to_record(results[0]), {"source": "empty", "route": "Null", "text": ""})

        two = _detector([frame], plates=(PLATE, Box(20.0, 140.0, 140.0, 180.0)))
        results = process_batch([frame], two, FixedRecognizer("1234ABC"), vlm=OracleVlm("1234ABC"), all_plates=True)
        record = frame_to_record(results[0])
        self.assertEqual(record["source"], frame.digest()[:12])
        self.assertEqual(len(record["plates"]), 2)

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out" / "trace.jsonl"
            self.assertEqual(write_trace(results, path), 1)
            lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(json.loads(lines[0])["text"], "1234ABC")


class EndToEndTests(TestCase):

    def test_clean_frontal_plate_reads_on_fast_path_works(self):
        spec = PlateSpec("2345", "KHD", "L")
        plate_img, boxes = render_plate(spec)
        frame, truth = compose_scene(plate_img, spec, SceneSpec(offset=(-0.5, -0.5)), boxes)
        detector = FixtureDetector.from_pairs([(frame, AnnotationRecord("scene", [truth.car_box],
                                                                          [truth.plate_box]))])

        with MockVlmServer(default_response="000AAA") as server:
            reading = process_frame(frame, detector, TemplateRecognizer(),
                                    vlm=HttpVlmClient(endpoint=server.endpoint))
            self.assertEqual(server.request_count, 0)

        self.assertEqual(reading.route, ReadingRoute.FAST_PATH)
        self.assertEqual(reading.text, "2345KHD")

    def test_whole_frame_detector_on_crop_works(self):
        plate_img, _ = render_plate(PlateSpec("567", "XYZ", "C"))
        reading = process_frame(plate_img, WholeFrameDetector(), TemplateRecognizer(),
                                _config(**{"stages.vlm_on": False}))
        self.assertEqual(reading.text, "567XYZ")
