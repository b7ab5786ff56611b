"""Extend anchors into per-frame trajectories, then fill interior gaps.

A trajectory starts as the single anchored frame and grows outward in both
temporal directions: a neighboring frame joins when it holds a box whose
recognized text, center displacement, and area all stay within the
TrackParams thresholds relative to the nearest already-accepted frame.
Missing interior frames are filled afterwards by least-squares polynomial
fits over the observed (center, size, angle) curves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from . import geometry
from .align import Anchor, MatchResult, edit_distance, frame_word_distance
from .corpus import FrameDetections, LyricWord, Quad, SchemaError, VideoMeta


class TrackSource(str, Enum):
    DETECTED = "det"
    SEARCHED = "search"
    INTERPOLATED = "interp"


@dataclass(frozen=True)
class TrackParams:
    """Acceptance thresholds for the neighbor search.

    word_sim:  max normalized edit distance between lyric word and box text
    max_move:  max center displacement per frame of gap, as a fraction of
               the frame diagonal
    min_scale: min area ratio between candidate and last accepted quad
               (max ratio is its reciprocal)
    max_miss:  consecutive frames without an accepted box before a scan
               direction stops
    """

    word_sim: float = 0.34
    max_move: float = 0.10
    min_scale: float = 0.5
    max_miss: int = 12

    def __post_init__(self):
        if not 0.0 <= self.word_sim <= 1.0:
            raise ValueError("word_sim must be in [0,1]")
        if self.max_move <= 0:
            raise ValueError("max_move must be positive")
        if not 0.0 < self.min_scale <= 1.0:
            raise ValueError("min_scale must be in (0,1]")
        if self.max_miss < 1:
            raise ValueError("max_miss must be >= 1")


@dataclass(frozen=True)
class TrackedFrame:
    t: int
    quad: Quad
    source: TrackSource


@dataclass(frozen=True)
class Trajectory:
    k: int
    word: str
    anchor_t: int
    frames: tuple[TrackedFrame, ...]

    def frame_ts(self) -> list[int]:
        return [f.t for f in self.frames]

    def is_contiguous(self) -> bool:
        ts = self.frame_ts()
        return ts == list(range(ts[0], ts[0] + len(ts)))


def normalized_edit_distance(a: str, b: str) -> float:
    return edit_distance(a, b) / max(len(a), len(b), 1)


def quad_params(quad: Quad) -> tuple[float, float, float, float, float]:
    """(center_x, center_y, width, height, angle) of a quad.

    The angle comes from the first edge; width/height average the two
    opposing edge lengths so mildly irregular quads stay stable.
    """
    v = quad.vertices
    cx, cy = quad.center
    e1x, e1y = v[1][0] - v[0][0], v[1][1] - v[0][1]
    angle = math.atan2(e1y, e1x)
    w = 0.5 * (math.hypot(e1x, e1y) + math.hypot(v[2][0] - v[3][0], v[2][1] - v[3][1]))
    h = 0.5 * (math.hypot(v[3][0] - v[0][0], v[3][1] - v[0][1]) + math.hypot(v[2][0] - v[1][0], v[2][1] - v[1][1]))
    return cx, cy, w, h, angle


def _quad_from_params(cx: float, cy: float, w: float, h: float, angle: float) -> Quad:
    # fitted sizes can degenerate on adversarial data; keep the quad valid
    w = max(w, 1e-3)
    h = max(h, 1e-3)
    return Quad(geometry.rect_vertices(cx, cy, w, h, angle))


def extend_track(
    anchor: Anchor,
    frames: Sequence[FrameDetections],
    meta: VideoMeta,
    params: TrackParams = TrackParams(),
) -> Trajectory:
    """Grow an anchored word into a trajectory by scanning neighbor frames.

    The result may have interior gaps (see interpolate_gaps). Worst case it
    is the anchor frame alone. The anchor must carry its minimizing box.
    """
    if anchor.box is None:
        raise ValueError(f"anchor for word {anchor.word!r} at t={anchor.t} has no box to track")
    by_t = {f.t: f for f in frames}
    t_lo, t_hi = frames[0].t, frames[-1].t
    diagonal = meta.diagonal
    hi_scale = 1.0 / params.min_scale

    def scan(direction: int) -> list[TrackedFrame]:
        accepted: list[TrackedFrame] = []
        last_t = anchor.t
        last_quad = anchor.box.quad
        miss = 0
        t = anchor.t + direction
        while t_lo <= t <= t_hi and miss < params.max_miss:
            frame = by_t.get(t)
            best_key = None
            best_quad = None
            if frame is not None and frame.boxes:
                gap = abs(t - last_t)
                max_disp = params.max_move * diagonal * gap
                last_cx, last_cy = last_quad.center
                last_area = last_quad.area
                for box in frame.boxes:
                    sim = normalized_edit_distance(anchor.word, box.text)
                    if sim > params.word_sim:
                        continue
                    cx, cy = box.quad.center
                    disp = math.hypot(cx - last_cx, cy - last_cy)
                    if disp > max_disp:
                        continue
                    ratio = box.quad.area / last_area
                    if not params.min_scale <= ratio <= hi_scale:
                        continue
                    key = (sim, disp)
                    if best_key is None or key < best_key:
                        best_key = key
                        best_quad = box.quad
            if best_quad is not None:
                accepted.append(TrackedFrame(t=t, quad=best_quad, source=TrackSource.SEARCHED))
                last_t, last_quad = t, best_quad
                miss = 0
            else:
                miss += 1
            t += direction
        return accepted

    backward = scan(-1)
    forward = scan(+1)
    tracked = sorted(
        backward + [TrackedFrame(t=anchor.t, quad=anchor.box.quad, source=TrackSource.DETECTED)] + forward,
        key=lambda f: f.t,
    )
    return Trajectory(k=anchor.k, word=anchor.word, anchor_t=anchor.t, frames=tuple(tracked))


def interpolate_gaps(traj: Trajectory) -> Trajectory:
    """Fill interior missing frames by polynomial fits of the quad params.

    Each of (center_x, center_y, width, height, angle) is fitted by a
    least-squares polynomial of degree min(2, n_obs - 1) over all observed
    frames, then evaluated at the missing interior frames. Observed frames
    pass through untouched; there is no extrapolation beyond the span.
    """
    observed = traj.frames
    ts = [f.t for f in observed]
    missing = sorted(set(range(ts[0], ts[-1] + 1)) - set(ts))
    if not missing:
        return traj
    series = np.array([quad_params(f.quad) for f in observed], dtype=np.float64)
    series[:, 4] = np.unwrap(series[:, 4])
    degree = min(2, len(observed) - 1)
    t_obs = np.asarray(ts, dtype=np.float64)
    t_fill = np.asarray(missing, dtype=np.float64)
    fitted = np.empty((len(missing), 5))
    for col in range(5):
        poly = np.polynomial.Polynomial.fit(t_obs, series[:, col], deg=degree)
        fitted[:, col] = poly(t_fill)
    filled = [
        TrackedFrame(t=t, quad=_quad_from_params(*fitted[i]), source=TrackSource.INTERPOLATED)
        for i, t in enumerate(missing)
    ]
    merged = sorted(list(observed) + filled, key=lambda f: f.t)
    return replace(traj, frames=tuple(merged))


def track_all(
    match: MatchResult,
    frames: Sequence[FrameDetections],
    meta: VideoMeta,
    params: TrackParams = TrackParams(),
) -> list[Trajectory]:
    """Track every anchored word; trajectories come back in lyric order.

    Anchors without a box (the word matched an empty frame) have nothing
    to track and are skipped.
    """
    out = []
    for anchor in match.anchors:
        if anchor.box is None:
            continue
        out.append(interpolate_gaps(extend_track(anchor, frames, meta, params)))
    return out


def resolve_anchor_boxes(match: MatchResult, frames: Sequence[FrameDetections]) -> MatchResult:
    """Re-attach each anchor's minimizing box from the detection stream.

    anchors.json does not store quads, so a reloaded MatchResult needs the
    detections to recover them. Deterministic: same tie rules as matching.
    """
    by_t = {f.t: f for f in frames}
    anchors = []
    for a in match.anchors:
        frame = by_t.get(a.t)
        if frame is None:
            raise SchemaError(f"anchor t={a.t} not present in detection stream")
        _, box = frame_word_distance(LyricWord(k=a.k, text=a.word, raw=a.word), frame)
        anchors.append(replace(a, box=box))
    return MatchResult(anchors=tuple(anchors), total_cost=match.total_cost)


def trajectories_to_lines(trajectories: Iterable[Trajectory]) -> Iterable[str]:
    for traj in trajectories:
        yield json.dumps(
            {
                "k": traj.k,
                "word": traj.word,
                "anchor_t": traj.anchor_t,
                "frames": [
                    {"t": f.t, "poly": f.quad.as_list(), "src": f.source.value} for f in traj.frames
                ],
            },
            separators=(",", ":"),
        )


def write_trajectories(trajectories: Iterable[Trajectory], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in trajectories_to_lines(trajectories):
            fh.write(line + "\n")


def load_trajectories(path: Union[str, Path]) -> list[Trajectory]:
    out = []
    sources = {s.value: s for s in TrackSource}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from exc
            missing = {"k", "word", "anchor_t", "frames"} - obj.keys()
            if missing:
                raise SchemaError(f"trajectory missing keys {sorted(missing)}", line_no)
            tracked = []
            for rec in obj["frames"]:
                if rec.get("src") not in sources:
                    raise SchemaError(f"src must be one of {sorted(sources)}, got {rec.get('src')!r}", line_no)
                try:
                    quad = Quad.from_points(rec["poly"])
                except (KeyError, ValueError) as exc:
                    raise SchemaError(f"bad trajectory frame: {exc}", line_no) from exc
                tracked.append(TrackedFrame(t=int(rec["t"]), quad=quad, source=sources[rec["src"]]))
            out.append(
                Trajectory(
                    k=int(obj["k"]),
                    word=str(obj["word"]),
                    anchor_t=int(obj["anchor_t"]),
                    frames=tuple(tracked),
                )
            )
    return out
