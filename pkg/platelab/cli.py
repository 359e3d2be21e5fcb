"""
Command-line entry points.

    platelab run IMAGE              read one frame, print its JSON trace record
    platelab batch INPUT...         read many frames into a JSONL trace
    platelab synth OUT_DIR          render a synthetic corpus
    platelab eval MANIFEST          score the pipeline on a manifest
    platelab ablate MANIFEST        score the stage-toggle grid
    platelab rectify|enhance|ocr    run a single stage on a plate crop
    platelab mock-vlm               serve the canned-answer model endpoint

Pipeline flags may be given before or after the subcommand. stdout carries only the machine-readable
payload; diagnostics go to stderr. Exit codes: 0 success, 1 failed assertion, 2 I/O or configuration error.
"""

# Import Built-Ins
import argparse
import json
import logging
import shlex
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Import Third-Party
import polars as pl

# Import Homebrew
from platelab.config import PipelineConfig, apply_overrides, dump_config, load_config
from platelab.detection import DetectorPort, ExternalDetector, FixtureDetector, WholeFrameDetector
from platelab.evaluation import (ABLATION_CONFIGS, ablation_frame, format_table, report_to_frame,
                                 run_ablation, run_eval, write_report, write_table, zero_time)
from platelab.exceptions import ConfigError, PlatelabError
from platelab.fallback import HttpVlmClient, MockVlmServer, OracleVlm
from platelab.imaging import read_image, write_image
from platelab.photometric import photometric_correct
from platelab.pipeline import BatchItem, dumps_record, frame_to_record, process_batch, run_item
from platelab.reading import ExternalRecognizer, RecognizerPort, TemplateRecognizer, assemble
from platelab.rectify import rectify
from platelab.synth import DETECTIONS_NAME, NoiseSpec, generate_corpus

# Init Logging Facilities
log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_IO = 2

# flag dest -> (config key, value stored when the flag is a switch)
FLAG_FIELDS: Dict[str, Tuple[str, Any]] = {
    "conf_threshold": ("detection.conf_threshold", None),
    "pad_px": ("detection.pad_px", None),
    "all_plates": ("detection.all_plates", True),
    "no_rectify": ("stages.rectify_on", False),
    "no_photometric": ("stages.photometric_on", False),
    "no_vlm": ("stages.vlm_on", False),
    "no_fast_ocr": ("stages.fast_ocr_on", False),
    "tau": ("reading.tau", None),
    "min_chars": ("reading.min_chars", None),
    "vlm_endpoint": ("vlm.endpoint", None),
    "vlm_model": ("vlm.model", None),
    "timeout_ms": ("vlm.timeout_ms", None),
    "jpeg_quality": ("vlm.jpeg_quality", None),
    "max_in_flight": ("vlm.max_in_flight", None),
}


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    group = parent.add_argument_group("configuration")
    group.add_argument("--config", help="INI configuration file.")
    group.add_argument("--set", dest="overrides", action="append", metavar="SECTION.KEY=VALUE",
                       help="Override one configuration key; may be repeated.")
    group.add_argument("--print-config", action="store_true", help="Print the effective configuration and exit.")
    group.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Default WARNING.")
    group.add_argument("--debug-dir", help="Write per-stage PNG dumps here.")

    stages = parent.add_argument_group("pipeline")
    stages.add_argument("--conf-threshold", type=float, help="Detector confidence threshold.")
    stages.add_argument("--pad-px", type=int, help="ROI padding in pixels.")
    stages.add_argument("--all-plates", action="store_true", help="Read every validated plate, not only the best.")
    stages.add_argument("--no-rectify", action="store_true", help="Skip geometric rectification.")
    stages.add_argument("--no-photometric", action="store_true", help="Skip gamma correction.")
    stages.add_argument("--no-vlm", action="store_true", help="Never consult the VLM.")
    stages.add_argument("--no-fast-ocr", action="store_true", help="Read every plate with the VLM.")
    stages.add_argument("--tau", type=float, help="Tripwire confidence ratio.")
    stages.add_argument("--min-chars", type=int, help="Tripwire minimum character count.")
    stages.add_argument("--vlm-endpoint", help="VLM generate endpoint URL.")
    stages.add_argument("--vlm-model", help="VLM model name.")
    stages.add_argument("--timeout-ms", type=int, help="VLM request timeout.")
    stages.add_argument("--jpeg-quality", type=int, help="JPEG quality of VLM requests.")
    stages.add_argument("--max-in-flight", type=int, help="Concurrent VLM requests.")

    return parent


def _ports_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--annotations", help="Detection sidecar JSONL for the fixture detector.")
    parent.add_argument("--detector-cmd", help="External detector command (line-delimited JSON over stdio).")
    parent.add_argument("--recognizer-cmd", help="External recogniser command (line-delimited JSON over stdio).")
    parent.add_argument("--jitter", type=float, default=0.0, help="Fixture detector box jitter in pixels.")
    parent.add_argument("--drop-rate", type=float, default=0.0, help="Fixture detector box drop probability.")
    parent.add_argument("--seed", type=int, default=0, help="Seed of fixture perturbations and the oracle VLM.")
    parent.add_argument("--workers", type=int, default=1, help="Worker threads.")
    parent.add_argument("--no-timings", action="store_true", help="Zero all timings for byte-stable output.")
    parent.add_argument("--progress", action="store_true", help="Show progress bars on stderr.")
    return parent


def _eval_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("manifest", help="Manifest JSONL.")
    parent.add_argument("--image-root", help="Directory image names are relative to (default: manifest dir).")
    parent.add_argument("--vlm", choices=["oracle", "http"], default="oracle",
                        help="Fallback reader: ground-truth oracle or the configured HTTP endpoint.")
    parent.add_argument("--oracle-fidelity", type=float, default=0.9, help="Share of correct oracle answers.")
    return parent


def build_parser() -> argparse.ArgumentParser:
    config = _config_parent()
    ports = _ports_parent()
    evaluation = _eval_parent()

    parser = argparse.ArgumentParser(prog="platelab", description="Licence-plate reading pipeline.",
                                     parents=[config])
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    run = commands.add_parser("run", parents=[config, ports], help="Read one image.")
    run.add_argument("image")

    batch = commands.add_parser("batch", parents=[config, ports], help="Read many images into a trace.")
    batch.add_argument("inputs", nargs="+", help="Image files, or one manifest JSONL with an image column.")
    batch.add_argument("--out", default="-", help="Trace JSONL path, - for stdout.")

    synth = commands.add_parser("synth", parents=[config], help="Render a synthetic corpus.")
    synth.add_argument("out_dir")
    synth.add_argument("-n", "--count", type=int, default=100)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--angle", choices=["frontal", "tilted", "steep", "mixed"], default="mixed")
    synth.add_argument("--illumination", choices=["low", "medium", "high", "mixed"], default="high")
    synth.add_argument("--distance", choices=["near", "normal", "far", "mixed"], default="normal")
    synth.add_argument("--noise-sigma", type=float, default=0.0)
    synth.add_argument("--salt-pepper", type=float, default=0.0)
    synth.add_argument("--blur", type=float, default=0.0)
    synth.add_argument("--workers", type=int, default=1)
    synth.add_argument("--progress", action="store_true")

    evaluate = commands.add_parser("eval", parents=[config, ports, evaluation], help="Score a manifest.")
    evaluate.add_argument("--out", help="Report JSON path; the table always goes to stdout.")
    evaluate.add_argument("--records-csv", help="Per-record CSV dump.")
    evaluate.add_argument("--include-far", action="store_true", help="Keep far-distance records.")

    ablate = commands.add_parser("ablate", parents=[config, ports, evaluation], help="Score the ablation grid.")
    ablate.add_argument("--out", required=True, help="Table path (.csv or .json).")
    ablate.add_argument("--configs", help=f"Comma-separated subset of {','.join(ABLATION_CONFIGS)}.")

    for stage in ("rectify", "enhance"):
        stage_parser = commands.add_parser(stage, parents=[config], help=f"Run the {stage} stage on a plate crop.")
        stage_parser.add_argument("image")
        stage_parser.add_argument("--out", required=True, help="Output PNG.")
    ocr = commands.add_parser("ocr", parents=[config], help="Recognise characters on a plate crop.")
    ocr.add_argument("image")
    ocr.add_argument("--recognizer-cmd", help="External recogniser command.")

    mock = commands.add_parser("mock-vlm", parents=[config], help="Serve the mock VLM endpoint.")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=11434)
    mock.add_argument("--default-response", default="")
    mock.add_argument("--responses", help="JSON file mapping JPEG SHA-256 digests to answers.")
    mock.add_argument("--delay-ms", type=float, default=0.0)

    return parser


def _parse_override(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """
    Effective configuration: defaults, then --config, the endpoint environment variable, --set and flags.
    """

    cfg = load_config(getattr(args, "config", None))
    overrides: Dict[str, Any] = dict(_parse_override(text) for text in getattr(args, "overrides", []) or [])
    for dest, (key, switched) in FLAG_FIELDS.items():
        if hasattr(args, dest):
            overrides[key] = switched if switched is not None else getattr(args, dest)

    return apply_overrides(cfg, overrides)


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _detector(args: argparse.Namespace, frame_root: Optional[Path]) -> DetectorPort:
    if args.detector_cmd:
        return ExternalDetector(shlex.split(args.detector_cmd))

    sidecar = Path(args.annotations) if args.annotations else None
    if sidecar is None and frame_root is not None and (frame_root / DETECTIONS_NAME).exists():
        sidecar = frame_root / DETECTIONS_NAME
    if sidecar is None:
        log.info("No detection sidecar, treating every frame as a plate crop")
        return WholeFrameDetector()

    return FixtureDetector.from_sidecar(sidecar, jitter=args.jitter, drop_rate=args.drop_rate, seed=args.seed)


def _recognizer(args: argparse.Namespace, cfg: PipelineConfig) -> RecognizerPort:
    if getattr(args, "recognizer_cmd", None):
        return ExternalRecognizer(shlex.split(args.recognizer_cmd))
    return TemplateRecognizer(cfg=cfg.reading)


def _print(payload: str) -> None:
    sys.stdout.write(payload + "\n")
    sys.stdout.flush()


def cmd_run(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    image = Path(args.image)
    if not image.is_file():
        raise FileNotFoundError(f"No such image: {image}")

    detector = _detector(args, image.parent)
    vlm = HttpVlmClient(cfg.vlm) if cfg.stages.vlm_on else None
    item = BatchItem(image, image.name)
    result = run_item(item, detector, _recognizer(args, cfg), cfg, vlm, cfg.detection.all_plates,
                      getattr(args, "debug_dir", None))
    if result.failed:
        raise PlatelabError(result.error)

    _print(dumps_record(frame_to_record(result, include_timings=not args.no_timings)))

    return EXIT_OK


def _frame_inputs(inputs: Sequence[str]) -> Tuple[List[BatchItem], Optional[Path]]:
    if len(inputs) == 1 and inputs[0].endswith(".jsonl"):
        manifest = Path(inputs[0])
        root = manifest.parent
        names = pl.read_ndjson(manifest)["image"].to_list()
        return [BatchItem(root / str(name), str(name)) for name in names], root

    paths = [Path(p) for p in inputs]
    roots = {p.parent for p in paths}
    return [BatchItem(p, str(p)) for p in paths], roots.pop() if len(roots) == 1 else None


def cmd_batch(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    items, root = _frame_inputs(args.inputs)
    detector = _detector(args, root)
    vlm = HttpVlmClient(cfg.vlm) if cfg.stages.vlm_on else None

    results = process_batch(items, detector, _recognizer(args, cfg), cfg, vlm, workers=args.workers,
                            debug_dir=getattr(args, "debug_dir", None), progress=args.progress)
    assert len(results) == len(items), "batch lost frames"

    lines = [dumps_record(frame_to_record(r, include_timings=not args.no_timings)) for r in results]
    if args.out == "-":
        for line in lines:
            _print(line)
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    failed = sum(r.failed for r in results)
    if failed:
        log.warning("%d of %d frames failed", failed, len(results))

    return EXIT_OK


def cmd_synth(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    noise = NoiseSpec(args.noise_sigma, args.salt_pepper, args.blur)
    manifest = generate_corpus(args.out_dir, args.count, args.seed, args.angle, args.illumination, args.distance,
                               noise, args.workers, args.progress)
    _print(json.dumps({"out_dir": str(args.out_dir), "n": manifest.height}, sort_keys=True))

    return EXIT_OK


def _vlm_source(args: argparse.Namespace, cfg: PipelineConfig):
    if args.vlm == "http":
        return HttpVlmClient(cfg.vlm)
    fidelity, seed = args.oracle_fidelity, args.seed
    return lambda record: OracleVlm(record.plate, fidelity, seed)


def _manifest_root(args: argparse.Namespace) -> Path:
    return Path(args.image_root) if args.image_root else Path(args.manifest).parent


def cmd_eval(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    root = _manifest_root(args)
    detector = _detector(args, root)
    vlm = _vlm_source(args, cfg) if cfg.stages.vlm_on else None

    report = run_eval(args.manifest, cfg, detector, _recognizer(args, cfg), vlm, root, args.workers,
                      exclude_far=not args.include_far, progress=args.progress)
    assert report.n_plates + report.n_errors == len(report.records), "evaluation lost records"

    if args.out:
        write_report(report, args.out, args.records_csv, include_timings=not args.no_timings)
    elif args.records_csv:
        write_table((report.records if not args.no_timings else zero_time(report.records)).set_index("image"),
                    args.records_csv)

    table = report_to_frame(report)
    _print(format_table(table if not args.no_timings else zero_time(table)))

    return EXIT_OK


def cmd_ablate(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    root = _manifest_root(args)
    detector = _detector(args, root)
    names = [name.strip() for name in args.configs.split(",")] if args.configs else None
    needs_vlm = any(ABLATION_CONFIGS[n].vlm_on for n in (names or ABLATION_CONFIGS) if n in ABLATION_CONFIGS)
    vlm = _vlm_source(args, cfg) if needs_vlm else None

    result = run_ablation(args.manifest, detector, _recognizer(args, cfg), vlm, cfg, names, root, args.workers,
                          args.progress)
    assert len(result.table) == len(names or ABLATION_CONFIGS)

    table = ablation_frame(result, include_timings=not args.no_timings)
    write_table(table, args.out)
    _print(format_table(table))

    return EXIT_OK


def cmd_stage(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    """
    Runs rectify, enhance or ocr on a single plate crop and prints its decision record.
    """

    roi = read_image(args.image)

    if args.command == "rectify":
        outcome = rectify(roi, cfg.rectify, cfg.imaging, getattr(args, "debug_dir", None), Path(args.image).stem)
        write_image(outcome.image, args.out)
        stats = outcome.to_dict()
    elif args.command == "enhance":
        image, decision = photometric_correct(roi, cfg.photometric)
        write_image(image, args.out)
        stats = decision.to_dict()
    elif args.command == "ocr":
        chars = _recognizer(args, cfg).recognize(roi)
        assembled = assemble(chars, roi.width, roi.height, cfg.reading)
        stats = {"chars": [c.to_dict() for c in chars], "assembled": assembled.to_dict()}
    else:
        raise ValueError(f"Unknown stage {args.command!r}")

    _print(json.dumps(stats, sort_keys=True))

    return EXIT_OK


def cmd_mock_vlm(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    responses = {}
    if args.responses:
        responses = json.loads(Path(args.responses).read_text(encoding="utf-8"))
    server = MockVlmServer(responses, args.default_response, args.delay_ms, host=args.host, port=args.port)
    server.serve_forever()

    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "batch": cmd_batch,
    "synth": cmd_synth,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "rectify": cmd_stage,
    "enhance": cmd_stage,
    "ocr": cmd_stage,
    "mock-vlm": cmd_mock_vlm,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(getattr(args, "log_level", "WARNING"))

    try:
        cfg = resolve_config(args)
        if getattr(args, "print_config", False):
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        if args.command is None:
            parser.error("a command is required unless --print-config is given")
        return COMMANDS[args.command](args, cfg)
    except AssertionError as err:
        log.error("Assertion failed: %s", err)
        return EXIT_ASSERTION
    except (OSError, PlatelabError, ValueError, KeyError) as err:
        log.error("%s: %s", type(err).__name__, err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
