"""Command-line front end: ocr-adapter --video f.mp4 --stride 1 --out dir/"""

from __future__ import annotations

import argparse
import json
import sys

from .adapter import AdapterConfig, ModelLoadError, VideoDecodeError, run_adapter
from .detect import DETECTORS
from .recognize import RECOGNIZERS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocr-adapter",
        description="Run per-frame text detection/recognition on a video and emit "
        "detections.jsonl + video.meta.json.",
    )
    parser.add_argument("--video", required=True, help="input video file")
    parser.add_argument("--stride", type=int, default=1, help="process every Nth frame")
    parser.add_argument(
        "--detectors", nargs="+", default=["otsu-contour"],
        help=f"detector ids to merge (available: {sorted(DETECTORS)})",
    )
    parser.add_argument(
        "--recognizer", default="template",
        help=f"recognizer id (available: {sorted(RECOGNIZERS)})",
    )
    parser.add_argument("--conf-floor", type=float, default=0.0, help="drop boxes below this confidence")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            video=args.video,
            stride=args.stride,
            detectors=tuple(args.detectors),
            recognizer=args.recognizer,
            conf_floor=args.conf_floor,
        )
        detections, meta = run_adapter(config, args.out)
    except (VideoDecodeError, ModelLoadError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(f"wrote {detections} and {meta}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
