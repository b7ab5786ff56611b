"""Data model, interchange-file IO, lyrics tokenization, and box dedup.

File formats owned by this module:
  lyrics.txt        UTF-8 plain text, whitespace-separated words
  detections.jsonl  one JSON object per frame:
                    {"t":int,"boxes":[{"poly":[[x,y]*4],"text":str,"conf":float,"det":str}]}
  video.meta.json   {"id":str,"fps":float,"width":int,"height":int,"frames":int}
  gt.json           {"frames":[{"t":int,"boxes":[{"poly":[[x,y]*4],"text":str}]}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

from . import geometry


class SchemaError(ValueError):
    """A record does not match the interchange schema."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotoneFrames(SchemaError):
    """Frame indices in a detection stream must be strictly increasing."""


class EmptyLyrics(ValueError):
    """No lyric word survived normalization."""


def normalize_word(raw: str) -> str:
    """Uppercase and strip surrounding punctuation; keep inner marks.

    "don't" -> "DON'T", "!!!" -> "".
    """
    s = raw.upper()
    start, end = 0, len(s)
    while start < end and not s[start].isalnum():
        start += 1
    while end > start and not s[end - 1].isalnum():
        end -= 1
    return s[start:end]


@dataclass(frozen=True)
class LyricWord:
    k: int
    text: str
    raw: str

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"lyric index must be >= 1, got {self.k}")
        if not self.text:
            raise ValueError("lyric word text must be non-empty")


@dataclass(frozen=True)
class LyricSequence:
    words: tuple[LyricWord, ...]

    def __post_init__(self):
        if not self.words:
            raise EmptyLyrics("lyric sequence must contain at least one word")
        for i, w in enumerate(self.words, start=1):
            if w.k != i:
                raise ValueError(f"lyric indices must be contiguous 1..K, got {w.k} at position {i}")

    @property
    def K(self) -> int:
        return len(self.words)

    def texts(self) -> list[str]:
        return [w.text for w in self.words]


@dataclass(frozen=True)
class Quad:
    """Convex quadrilateral, vertices counter-clockwise (positive shoelace)."""

    vertices: tuple[geometry.Point, geometry.Point, geometry.Point, geometry.Point]

    @classmethod
    def from_points(cls, points) -> "Quad":
        """Build a Quad, reorienting clockwise input; rejects degenerate shapes."""
        pts = [(float(p[0]), float(p[1])) for p in points]
        if len(pts) != 4:
            raise ValueError(f"quad needs exactly 4 vertices, got {len(pts)}")
        if geometry.signed_area(pts) < 0:
            pts = [pts[0], pts[3], pts[2], pts[1]]
        if not geometry.is_convex(pts):
            raise ValueError("quad must be convex with positive area")
        return cls(tuple(pts))

    @property
    def area(self) -> float:
        return geometry.area(self.vertices)

    @property
    def center(self) -> geometry.Point:
        xs = sum(p[0] for p in self.vertices) / 4.0
        ys = sum(p[1] for p in self.vertices) / 4.0
        return (xs, ys)

    def as_list(self) -> list[list[float]]:
        return [[x, y] for x, y in self.vertices]


@dataclass(frozen=True)
class Detection:
    quad: Quad
    text: str  # normalized recognized string (may be empty after stripping)
    confidence: float
    detector: str

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


@dataclass(frozen=True)
class FrameDetections:
    t: int
    boxes: tuple[Detection, ...] = ()

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"frame index must be >= 0, got {self.t}")


@dataclass(frozen=True)
class VideoMeta:
    id: str
    fps: float
    width: int
    height: int
    frames: int

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame size must be positive")
        if self.frames < 1:
            raise ValueError("frame count must be >= 1")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


@dataclass(frozen=True)
class GTBox:
    quad: Quad
    text: str


@dataclass(frozen=True)
class GTFrame:
    t: int
    boxes: tuple[GTBox, ...] = ()


def tokenize_lyrics(raw_text: str) -> LyricSequence:
    """Split lyrics on whitespace and normalize each token.

    Tokens that normalize to the empty string are dropped; indices are
    assigned in order starting at 1. Raises EmptyLyrics when nothing
    survives.
    """
    words = []
    for token in raw_text.split():
        text = normalize_word(token)
        if text:
            words.append(LyricWord(k=len(words) + 1, text=text, raw=token))
    if not words:
        raise EmptyLyrics("no lyric word survived normalization")
    return LyricSequence(tuple(words))


def load_lyrics(path: Union[str, Path]) -> LyricSequence:
    return tokenize_lyrics(Path(path).read_text(encoding="utf-8"))


def _quad_from_json(poly, line: Optional[int]) -> Quad:
    if not isinstance(poly, list) or len(poly) != 4:
        raise SchemaError(f"poly must be a list of 4 [x,y] pairs, got {poly!r}", line)
    for p in poly:
        if not (isinstance(p, list) and len(p) == 2 and all(isinstance(v, (int, float)) for v in p)):
            raise SchemaError(f"poly vertex must be [x,y] numbers, got {p!r}", line)
    try:
        return Quad.from_points(poly)
    except ValueError as exc:
        raise SchemaError(str(exc), line) from exc


def _detection_from_json(obj, line: Optional[int]) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaError(f"box must be an object, got {obj!r}", line)
    missing = {"poly", "text", "conf", "det"} - obj.keys()
    if missing:
        raise SchemaError(f"box missing keys {sorted(missing)}", line)
    quad = _quad_from_json(obj["poly"], line)
    if not isinstance(obj["text"], str):
        raise SchemaError("box text must be a string", line)
    conf = obj["conf"]
    if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise SchemaError(f"conf must be a number in [0,1], got {conf!r}", line)
    if not isinstance(obj["det"], str) or not obj["det"]:
        raise SchemaError("det must be a non-empty string", line)
    return Detection(quad=quad, text=normalize_word(obj["text"]), confidence=float(conf), detector=obj["det"])


def parse_detections(lines: Union[str, Iterable[str]]) -> list[FrameDetections]:
    """Parse a detections.jsonl stream.

    Accepts a whole-text string or an iterable of lines. Recognized text
    is normalized exactly like lyric words. Raises SchemaError with the
    offending line number, NonMonotoneFrames when t does not strictly
    increase.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    frames: list[FrameDetections] = []
    prev_t = -1
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict) or "t" not in obj or "boxes" not in obj:
            raise SchemaError('frame record must be {"t":..., "boxes":[...]}', line_no)
        t = obj["t"]
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            raise SchemaError(f"t must be a non-negative integer, got {t!r}", line_no)
        if t <= prev_t:
            raise NonMonotoneFrames(f"frame index {t} after {prev_t}; t must strictly increase", line_no)
        prev_t = t
        if not isinstance(obj["boxes"], list):
            raise SchemaError("boxes must be a list", line_no)
        boxes = tuple(_detection_from_json(b, line_no) for b in obj["boxes"])
        frames.append(FrameDetections(t=t, boxes=boxes))
    return frames


def detections_to_lines(frames: Iterable[FrameDetections]) -> Iterator[str]:
    for frame in frames:
        yield json.dumps(
            {
                "t": frame.t,
                "boxes": [
                    {"poly": b.quad.as_list(), "text": b.text, "conf": b.confidence, "det": b.detector}
                    for b in frame.boxes
                ],
            },
            separators=(",", ":"),
        )


def write_detections(frames: Iterable[FrameDetections], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in detections_to_lines(frames):
            fh.write(line + "\n")


def load_detections(path: Union[str, Path]) -> list[FrameDetections]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_detections(fh)


def load_video_meta(path: Union[str, Path]) -> VideoMeta:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    missing = {"id", "fps", "width", "height", "frames"} - obj.keys()
    if missing:
        raise SchemaError(f"video meta missing keys {sorted(missing)}")
    try:
        return VideoMeta(
            id=str(obj["id"]),
            fps=float(obj["fps"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
            frames=int(obj["frames"]),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid video meta: {exc}") from exc


def write_video_meta(meta: VideoMeta, path: Union[str, Path]) -> None:
    obj = {"id": meta.id, "fps": meta.fps, "width": meta.width, "height": meta.height, "frames": meta.frames}
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def parse_ground_truth(obj: Union[str, dict]) -> list[GTFrame]:
    """Parse gt.json content (text or already-decoded dict)."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict) or "frames" not in obj or not isinstance(obj["frames"], list):
        raise SchemaError('ground truth must be {"frames":[...]}')
    frames = []
    prev_t = -1
    for rec in obj["frames"]:
        if not isinstance(rec, dict) or "t" not in rec or "boxes" not in rec:
            raise SchemaError(f"gt frame record must have t and boxes, got {rec!r}")
        t = rec["t"]
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            raise SchemaError(f"gt frame index must be a non-negative integer, got {t!r}")
        if t <= prev_t:
            raise NonMonotoneFrames(f"gt frame index {t} after {prev_t}")
        prev_t = t
        boxes = []
        for b in rec["boxes"]:
            if not isinstance(b, dict) or "poly" not in b or "text" not in b:
                raise SchemaError(f"gt box must have poly and text, got {b!r}")
            boxes.append(GTBox(quad=_quad_from_json(b["poly"], None), text=normalize_word(str(b["text"]))))
        frames.append(GTFrame(t=t, boxes=tuple(boxes)))
    return frames


def load_ground_truth(path: Union[str, Path]) -> list[GTFrame]:
    return parse_ground_truth(Path(path).read_text(encoding="utf-8"))


def write_ground_truth(frames: Iterable[GTFrame], path: Union[str, Path]) -> None:
    obj = {
        "frames": [
            {"t": f.t, "boxes": [{"poly": b.quad.as_list(), "text": b.text} for b in f.boxes]}
            for f in frames
        ]
    }
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def dedup_detections(frame: FrameDetections, overlap_threshold: float = 0.5) -> FrameDetections:
    """Drop cross-detector duplicates: same normalized text, IoU >= threshold.

    Of a duplicate pair the lower-confidence box is removed (tie: the later
    box in input order). Box order is otherwise preserved. Boxes from the
    same detector are never compared.
    """
    if not 0.0 < overlap_threshold <= 1.0:
        raise ValueError(f"overlap_threshold must be in (0,1], got {overlap_threshold}")
    boxes = list(frame.boxes)
    removed = [False] * len(boxes)
    for i in range(len(boxes)):
        if removed[i]:
            continue
        for j in range(i + 1, len(boxes)):
            if removed[j]:
                continue
            a, b = boxes[i], boxes[j]
            if a.detector == b.detector or a.text != b.text:
                continue
            if geometry.iou(a.quad.vertices, b.quad.vertices) < overlap_threshold:
                continue
            if b.confidence > a.confidence:
                removed[i] = True
                break
            removed[j] = True
    kept = tuple(b for b, gone in zip(boxes, removed) if not gone)
    return FrameDetections(t=frame.t, boxes=kept)
