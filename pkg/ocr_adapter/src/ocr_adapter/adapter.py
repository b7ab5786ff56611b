"""Decode a video, run detection + recognition per frame, emit JSONL.

Output matches the downstream pipeline's interchange schemas exactly:

  detections.jsonl  {"t":int,"boxes":[{"poly":[[x,y]*4],"text":str,"conf":float,"det":str}]}
  video.meta.json   {"id":str,"fps":float,"width":int,"height":int,"frames":int}

Recognized text is passed through raw; normalization is the consumer's
job. Frame indices always reflect original frame numbers, also under
stride.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import cv2
import numpy as np

from .detect import DETECTORS
from .recognize import RECOGNIZERS

log = logging.getLogger(__name__)


class VideoDecodeError(RuntimeError):
    """The input video cannot be opened or decoded."""


class ModelLoadError(RuntimeError):
    """A requested detector or recognizer id is not registered."""


@dataclass(frozen=True)
class AdapterConfig:
    video: Union[str, Path]
    stride: int = 1
    detectors: tuple[str, ...] = ("otsu-contour",)
    recognizer: str = "template"
    conf_floor: float = 0.0

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not self.detectors:
            raise ModelLoadError("at least one detector is required")
        if not 0.0 <= self.conf_floor <= 1.0:
            raise ValueError("conf_floor must be in [0,1]")


def run_adapter(config: AdapterConfig, out_dir: Union[str, Path]) -> tuple[Path, Path]:
    """Process the video; returns (detections.jsonl path, video.meta.json path)."""
    unknown = [d for d in config.detectors if d not in DETECTORS]
    if unknown:
        raise ModelLoadError(f"unknown detector(s) {unknown}; available: {sorted(DETECTORS)}")
    if config.recognizer not in RECOGNIZERS:
        raise ModelLoadError(
            f"unknown recognizer {config.recognizer!r}; available: {sorted(RECOGNIZERS)}"
        )
    recognize = RECOGNIZERS[config.recognizer]

    video_path = Path(config.video)
    capture = cv2.VideoCapture(str(video_path))
    if not capture.isOpened():
        raise VideoDecodeError(f"cannot open video {video_path}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    detections_path = out / "detections.jsonl"
    meta_path = out / "video.meta.json"

    fps = float(capture.get(cv2.CAP_PROP_FPS)) or 0.0
    width = height = 0
    frames_read = 0
    try:
        with open(detections_path, "w", encoding="utf-8") as fh:
            while True:
                ok, frame = capture.read()
                if not ok:
                    break
                t = frames_read
                frames_read += 1
                if height == 0:
                    height, width = frame.shape[:2]
                if t % config.stride != 0:
                    continue
                gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
                boxes = []
                for det_id in config.detectors:
                    for quad in DETECTORS[det_id](gray):
                        text, conf = recognize(gray, quad)
                        if not text or conf < config.conf_floor:
                            continue
                        boxes.append(
                            {
                                "poly": [[float(x), float(y)] for x, y in np.asarray(quad)],
                                "text": text,
                                "conf": round(conf, 4),
                                "det": det_id,
                            }
                        )
                fh.write(json.dumps({"t": t, "boxes": boxes}, separators=(",", ":")) + "\n")
    finally:
        capture.release()

    if frames_read == 0:
        detections_path.unlink(missing_ok=True)
        raise VideoDecodeError(f"no frames decoded from {video_path}")
    if fps <= 0:
        fps = 24.0
        log.warning("video reports no fps; defaulting to %.1f", fps)

    meta = {"id": video_path.stem, "fps": fps, "width": width, "height": height, "frames": frames_read}
    meta_path.write_text(json.dumps(meta, separators=(",", ":")) + "\n", encoding="utf-8")
    log.info("processed %d frames (stride %d) from %s", frames_read, config.stride, video_path.name)
    return detections_path, meta_path
