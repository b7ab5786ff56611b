"""Deterministic synthetic lyric-video scenarios for end-to-end testing.

A scenario scripts each word's on-screen span and motion analytically,
then emits the corresponding detection stream corrupted by a seeded noise
model, plus uncorrupted ground truth. Same seed, same bytes: every frame
draws from its own child RNG with a fixed draw count per scripted box, so
streams are reproducible and dropout decisions are coupled across noise
levels (lowering p_dropout can only reveal boxes, never hide them).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import geometry
from .corpus import (
    Detection,
    FrameDetections,
    GTBox,
    GTFrame,
    Quad,
    SchemaError,
    VideoMeta,
    normalize_word,
)
from .track import TrackedFrame, TrackSource, Trajectory


class ScriptOverlapError(ValueError):
    """Two scripts share a word and overlap in time (refrain collision)."""


ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ'"

# Text for spurious boxes; modeled on channel branding and background words.
DISTRACTORS = (
    "OFFICIAL", "SUBSCRIBE", "CHANNEL", "RECORDS", "PRESENTS", "EXCLUSIVE",
    "PREMIERE", "UNPLUGGED", "ACOUSTIC", "TRADEMARK", "COPYRIGHT", "WORLDWIDE",
)


@dataclass(frozen=True)
class Static:
    pass


@dataclass(frozen=True)
class Linear:
    vx: float  # px/frame
    vy: float


@dataclass(frozen=True)
class Scale:
    rate: float  # fractional size change per frame, compounded


@dataclass(frozen=True)
class Rotate:
    deg_per_frame: float


@dataclass(frozen=True)
class Circular:
    radius: float  # px
    deg_per_frame: float


Motion = Union[Static, Linear, Scale, Rotate, Circular]


@dataclass(frozen=True)
class MotionScript:
    word: str
    t_start: int
    t_end: int
    motion: Motion
    start: Quad

    def __post_init__(self):
        if normalize_word(self.word) != self.word or not self.word:
            raise ValueError(f"script word must be normalized, got {self.word!r}")
        if not 0 <= self.t_start <= self.t_end:
            raise ValueError(f"invalid span [{self.t_start}, {self.t_end}]")

    @property
    def span(self) -> int:
        return self.t_end - self.t_start + 1


@dataclass(frozen=True)
class NoiseModel:
    p_dropout: float = 0.0
    p_char_sub: float = 0.0
    p_spurious: float = 0.0  # expected spurious boxes per frame
    jitter_sigma: float = 0.0  # px, per vertex coordinate
    seed: int = 0

    def __post_init__(self):
        for name in ("p_dropout", "p_char_sub"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {v}")
        if self.p_spurious < 0 or self.jitter_sigma < 0:
            raise ValueError("p_spurious and jitter_sigma must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass(frozen=True)
class Scenario:
    meta: VideoMeta
    scripts: tuple[MotionScript, ...]
    noise: NoiseModel
    allow_overlap: bool = False
    gt_stride: int = 1


@dataclass(frozen=True)
class GeneratedVideo:
    meta: VideoMeta
    frames: list[FrameDetections]
    lyrics_text: str
    gt_frames: list[GTFrame]
    gt_trajectories: list[Trajectory]


@dataclass(frozen=True)
class CorpusStats:
    n_frames: int
    n_boxes: int
    boxes_per_frame: float
    distinct_words: int


def _translate(quad: Quad, dx: float, dy: float) -> Quad:
    return Quad(tuple((x + dx, y + dy) for x, y in quad.vertices))


def script_quad_at(script: MotionScript, t: int) -> Quad:
    """Analytic quad of a script at frame t (t within the span)."""
    p = t - script.t_start
    m = script.motion
    if isinstance(m, Static):
        return script.start
    if isinstance(m, Linear):
        return _translate(script.start, m.vx * p, m.vy * p)
    cx, cy = script.start.center
    if isinstance(m, Scale):
        factor = (1.0 + m.rate) ** p
        return Quad(tuple((cx + (x - cx) * factor, cy + (y - cy) * factor) for x, y in script.start.vertices))
    if isinstance(m, Rotate):
        a = math.radians(m.deg_per_frame * p)
        ca, sa = math.cos(a), math.sin(a)
        return Quad(
            tuple(
                (cx + (x - cx) * ca - (y - cy) * sa, cy + (x - cx) * sa + (y - cy) * ca)
                for x, y in script.start.vertices
            )
        )
    if isinstance(m, Circular):
        a = math.radians(m.deg_per_frame * p)
        dx = m.radius * (math.cos(a) - 1.0)
        dy = m.radius * math.sin(a)
        return _translate(script.start, dx, dy)
    raise TypeError(f"unknown motion {m!r}")


def _check_overlaps(scripts: Sequence[MotionScript]) -> None:
    by_word: dict[str, list[MotionScript]] = {}
    for s in scripts:
        by_word.setdefault(s.word, []).append(s)
    for word, group in by_word.items():
        group = sorted(group, key=lambda s: s.t_start)
        for a, b in zip(group, group[1:]):
            if b.t_start <= a.t_end:
                raise ScriptOverlapError(
                    f"word {word!r} scripted twice over overlapping spans "
                    f"[{a.t_start},{a.t_end}] and [{b.t_start},{b.t_end}]"
                )


def _corrupt(word: str, rng: np.random.Generator, p_char_sub: float) -> str:
    # draw both values for every char so the stream shape is noise-invariant
    chars = []
    for ch in word:
        u = rng.random()
        sub = ALPHABET[int(rng.integers(len(ALPHABET)))]
        chars.append(sub if u < p_char_sub else ch)
    return "".join(chars)


def _jitter(quad: Quad, rng: np.random.Generator, sigma: float) -> Quad:
    for _ in range(50):
        offsets = rng.normal(0.0, sigma, size=8) if sigma > 0 else np.zeros(8)
        pts = [
            (x + offsets[2 * i], y + offsets[2 * i + 1])
            for i, (x, y) in enumerate(quad.vertices)
        ]
        if geometry.is_convex(pts):
            return Quad(tuple(pts))
    return quad


def generate(
    scripts: Sequence[MotionScript],
    meta: VideoMeta,
    noise: NoiseModel = NoiseModel(),
    allow_overlap: bool = False,
    gt_stride: int = 1,
) -> GeneratedVideo:
    """Emit detections + lyrics + ground truth for a scripted scenario."""
    if gt_stride < 1:
        raise ValueError("gt_stride must be >= 1")
    for s in scripts:
        if s.t_end >= meta.frames:
            raise ValueError(f"script for {s.word!r} ends at {s.t_end}, beyond {meta.frames} frames")
    if not allow_overlap:
        _check_overlaps(scripts)
    ordered = sorted(range(len(scripts)), key=lambda i: (scripts[i].t_start, i))
    lyric_order = [scripts[i] for i in ordered]

    frames: list[FrameDetections] = []
    for t in range(meta.frames):
        rng = np.random.default_rng(np.random.SeedSequence((noise.seed, t)))
        boxes: list[Detection] = []
        for s in lyric_order:
            if not s.t_start <= t <= s.t_end:
                continue
            quad = script_quad_at(s, t)
            dropped = rng.random() < noise.p_dropout
            text = _corrupt(s.word, rng, noise.p_char_sub)
            jittered = _jitter(quad, rng, noise.jitter_sigma)
            conf = float(rng.uniform(0.5, 1.0))
            if not dropped:
                boxes.append(
                    Detection(quad=jittered, text=normalize_word(text), confidence=conf, detector="synth")
                )
        n_spurious = int(rng.poisson(noise.p_spurious)) if noise.p_spurious > 0 else 0
        for _ in range(n_spurious):
            cx = float(rng.uniform(0, meta.width))
            cy = float(rng.uniform(0, meta.height))
            w = float(rng.uniform(40, 300))
            h = float(rng.uniform(20, 80))
            angle = float(rng.uniform(-math.pi / 6, math.pi / 6))
            text = DISTRACTORS[int(rng.integers(len(DISTRACTORS)))]
            conf = float(rng.uniform(0.5, 1.0))
            boxes.append(
                Detection(
                    quad=Quad(geometry.rect_vertices(cx, cy, w, h, angle)),
                    text=text,
                    confidence=conf,
                    detector="synth",
                )
            )
        frames.append(FrameDetections(t=t, boxes=tuple(boxes)))

    lyrics_text = " ".join(s.word for s in lyric_order)
    gt_trajectories = [
        Trajectory(
            k=k,
            word=s.word,
            anchor_t=s.t_start,
            frames=tuple(
                TrackedFrame(t=t, quad=script_quad_at(s, t), source=TrackSource.DETECTED)
                for t in range(s.t_start, s.t_end + 1)
            ),
        )
        for k, s in enumerate(lyric_order, start=1)
    ]
    gt_frames = []
    for t in range(0, meta.frames, gt_stride):
        gt_boxes = tuple(
            GTBox(quad=script_quad_at(s, t), text=s.word)
            for s in lyric_order
            if s.t_start <= t <= s.t_end
        )
        gt_frames.append(GTFrame(t=t, boxes=gt_boxes))
    return GeneratedVideo(
        meta=meta,
        frames=frames,
        lyrics_text=lyrics_text,
        gt_frames=gt_frames,
        gt_trajectories=gt_trajectories,
    )


def corpus_stats(frames: Sequence[FrameDetections]) -> CorpusStats:
    """Aggregate counts for sanity-checking a generated corpus."""
    n_frames = len(frames)
    n_boxes = sum(len(f.boxes) for f in frames)
    words = {b.text for f in frames for b in f.boxes}
    return CorpusStats(
        n_frames=n_frames,
        n_boxes=n_boxes,
        boxes_per_frame=(n_boxes / n_frames) if n_frames else 0.0,
        distinct_words=len(words),
    )


# ---------------------------------------------------------------------------
# scenario construction

_POOL_CANDIDATES = (
    "ABOUT AGAIN ALIVE ALONE ALWAYS ANGEL ANSWER ANYTHING APART AROUND AWAY "
    "BABY BEAUTIFUL BECAUSE BEFORE BELIEVE BETTER BLUE BODY BREAK BREATHE BRIGHT "
    "BROKEN BURN CALL CANDLE CHANGE CITY CLOSE COLD COLOR COME CRAZY CRY DANCE "
    "DARK DAYS DESIRE DIAMOND DIFFERENT DOWN DREAM DRIVE EASY ECHO EMPTY ENOUGH "
    "EVERY EYES FADE FALL FEAR FEEL FIGHT FIRE FLAME FLY FOREVER FREE FRIDAY "
    "GAME GHOST GIVE GOLD GONE GOOD GRACE GROW HAND HAPPY HEART HEAVY HELLO "
    "HIGH HOLD HOME HOPE HOUR HURT INSIDE ISLAND JUMP KEEP KISS KNOW LATE "
    "LAUGH LIFE LIGHT LITTLE LONELY LOOK LOSE LOUD LOVE LUCKY MAGIC MAYBE "
    "MEMORY MIDNIGHT MILES MIND MIRROR MOMENT MONEY MOON MORNING MOUNTAIN MOVE "
    "MUSIC NAME NEVER NIGHT NOBODY NOISE NORTH NOTHING OCEAN ONLY OPEN OVER "
    "PARADISE PARTY PEACE PHONE PIECES PLACE PLAY PRAY PROMISE PROUD QUIET RAIN "
    "REASON REMEMBER RIDE RIVER ROAD ROCK ROLL RUNNING SAME SAVE SECRET SHADOW "
    "SHAKE SHINE SIDE SILVER SING SKIN SKY SLEEP SLOW SMILE SMOKE SOMEBODY "
    "SONG SOUL SOUND SPARK STAND STARS START STAY STONE STOP STORM STORY "
    "STRANGER STREET STRONG SUGAR SUMMER SUNDAY SWEET TAKE TALK TEARS THINK "
    "THOUGHT THUNDER TIME TIRED TODAY TOGETHER TOMORROW TOUCH TOWN TRAIN TRUE "
    "TRUST TRUTH TURN UNDER VOICE WAIT WALK WANT WARM WATCH WATER WAVES WEEKEND "
    "WHISPER WILD WIND WINDOW WINTER WISH WONDER WORDS WORLD WRONG YOUNG"
).split()


@lru_cache(maxsize=None)
def dissimilar_pool(min_distance: float = 0.5) -> tuple[str, ...]:
    """Word pool whose pairwise normalized edit distance exceeds min_distance.

    Also keeps every word that far from the spurious-text distractors, so a
    corrupted or spurious box can never impersonate a different pool word
    within the tracking similarity threshold.
    """
    from .track import normalized_edit_distance

    kept: list[str] = []
    for cand in _POOL_CANDIDATES:
        others = kept + list(DISTRACTORS)
        if all(normalized_edit_distance(cand, other) > min_distance for other in others):
            kept.append(cand)
    return tuple(kept)


def make_scenario(
    video_id: str,
    frames: int,
    words: int,
    seed: int = 0,
    fps: float = 24.0,
    width: int = 1920,
    height: int = 1080,
    noise: Optional[NoiseModel] = None,
    span_range: tuple[int, int] = (28, 48),
    gap_range: tuple[int, int] = (3, 10),
    max_phrase: int = 3,
    min_word_sep: int = 30,
    margin: int = 60,
) -> Scenario:
    """Deterministic scripted scenario with phrase layout and mixed motions.

    Raises ValueError when the requested word count cannot fit in the
    frame budget with the given span/gap ranges.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 7919)))
    pool = dissimilar_pool()
    scripts: list[MotionScript] = []
    last_end: dict[str, int] = {}
    t = margin // 2 + int(rng.integers(0, 10))
    limit = frames - margin
    while len(scripts) < words:
        remaining = words - len(scripts)
        phrase_n = min(int(rng.integers(1, max_phrase + 1)), remaining)
        span = int(rng.integers(span_range[0], span_range[1] + 1))
        if t + span + max_phrase * 3 >= limit:
            raise ValueError(
                f"cannot fit {words} words in {frames} frames with spans {span_range}; "
                f"placed {len(scripts)} so far"
            )
        chosen: list[str] = []
        for _ in range(phrase_n):
            for _attempt in range(100):
                w = pool[int(rng.integers(len(pool)))]
                if w not in chosen and last_end.get(w, -min_word_sep) <= t - min_word_sep:
                    break
            else:
                raise ValueError("word pool too small for the requested layout")
            chosen.append(w)
        offset = 0
        for w in chosen:
            t_start = t + offset
            offset += int(rng.integers(1, 4))
            t_end = min(t_start + span, limit - 1)
            motion = _sample_motion(rng, span)
            start = _sample_start_quad(rng, w, width, height, margin)
            scripts.append(MotionScript(word=w, t_start=t_start, t_end=t_end, motion=motion, start=start))
            last_end[w] = t_end
        t = t + span + int(rng.integers(gap_range[0], gap_range[1] + 1))
    meta = VideoMeta(id=video_id, fps=fps, width=width, height=height, frames=frames)
    return Scenario(meta=meta, scripts=tuple(scripts), noise=noise or NoiseModel())


def _sample_motion(rng: np.random.Generator, span: int) -> Motion:
    u = rng.random()
    if u < 0.40:
        return Static()
    if u < 0.65:
        speed = float(rng.uniform(1.0, 7.0))
        angle = float(rng.uniform(0, 2 * math.pi))
        return Linear(vx=speed * math.cos(angle), vy=speed * math.sin(angle))
    if u < 0.80:
        return Scale(rate=float(rng.uniform(-0.015, 0.015)))
    if u < 0.90:
        return Rotate(deg_per_frame=float(rng.uniform(-2.0, 2.0)))
    # keep circular arcs short enough for a quadratic fit to stay tight
    max_deg = min(2.0, 100.0 / max(span, 1))
    return Circular(radius=float(rng.uniform(40, 100)), deg_per_frame=float(rng.uniform(0.5, max_deg)))


def _sample_start_quad(rng: np.random.Generator, word: str, width: int, height: int, margin: int) -> Quad:
    h = float(rng.uniform(40, 70))
    w = max(40.0, 0.55 * h * len(word))
    cx = float(rng.uniform(margin + w / 2, width - margin - w / 2))
    cy = float(rng.uniform(margin + h / 2, height - margin - h / 2))
    return Quad(geometry.rect_vertices(cx, cy, w, h, 0.0))


def paper_scale_scenario(seed: int = 0, video_id: str = "paper-scale") -> Scenario:
    """Scenario at the scale of a typical full-length lyric video."""
    return make_scenario(
        video_id=video_id,
        frames=5471,
        words=338,
        seed=seed,
        span_range=(14, 24),
        gap_range=(2, 6),
        max_phrase=4,
        min_word_sep=30,
    )


# ---------------------------------------------------------------------------
# scenario file IO


def _motion_to_json(m: Motion) -> dict:
    if isinstance(m, Static):
        return {"kind": "static"}
    if isinstance(m, Linear):
        return {"kind": "linear", "vx": m.vx, "vy": m.vy}
    if isinstance(m, Scale):
        return {"kind": "scale", "rate": m.rate}
    if isinstance(m, Rotate):
        return {"kind": "rotate", "deg_per_frame": m.deg_per_frame}
    if isinstance(m, Circular):
        return {"kind": "circular", "radius": m.radius, "deg_per_frame": m.deg_per_frame}
    raise TypeError(f"unknown motion {m!r}")


def _motion_from_json(obj: dict) -> Motion:
    kind = obj.get("kind")
    try:
        if kind == "static":
            return Static()
        if kind == "linear":
            return Linear(vx=float(obj["vx"]), vy=float(obj["vy"]))
        if kind == "scale":
            return Scale(rate=float(obj["rate"]))
        if kind == "rotate":
            return Rotate(deg_per_frame=float(obj["deg_per_frame"]))
        if kind == "circular":
            return Circular(radius=float(obj["radius"]), deg_per_frame=float(obj["deg_per_frame"]))
    except KeyError as exc:
        raise SchemaError(f"motion {kind!r} missing field {exc}") from exc
    raise SchemaError(f"unknown motion kind {kind!r}")


def write_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    obj = {
        "meta": {
            "id": scenario.meta.id,
            "fps": scenario.meta.fps,
            "width": scenario.meta.width,
            "height": scenario.meta.height,
            "frames": scenario.meta.frames,
        },
        "noise": {
            "p_dropout": scenario.noise.p_dropout,
            "p_char_sub": scenario.noise.p_char_sub,
            "p_spurious": scenario.noise.p_spurious,
            "jitter_sigma": scenario.noise.jitter_sigma,
            "seed": scenario.noise.seed,
        },
        "allow_overlap": scenario.allow_overlap,
        "gt_stride": scenario.gt_stride,
        "scripts": [
            {
                "word": s.word,
                "t_start": s.t_start,
                "t_end": s.t_end,
                "motion": _motion_to_json(s.motion),
                "quad": s.start.as_list(),
            }
            for s in scenario.scripts
        ],
    }
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def load_scenario(path: Union[str, Path]) -> Scenario:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = {"meta", "noise", "scripts"} - obj.keys()
    if missing:
        raise SchemaError(f"scenario missing keys {sorted(missing)}")
    m = obj["meta"]
    try:
        meta = VideoMeta(
            id=str(m["id"]), fps=float(m["fps"]), width=int(m["width"]),
            height=int(m["height"]), frames=int(m["frames"]),
        )
        nz = obj["noise"]
        noise = NoiseModel(
            p_dropout=float(nz.get("p_dropout", 0.0)),
            p_char_sub=float(nz.get("p_char_sub", 0.0)),
            p_spurious=float(nz.get("p_spurious", 0.0)),
            jitter_sigma=float(nz.get("jitter_sigma", 0.0)),
            seed=int(nz.get("seed", 0)),
        )
        scripts = tuple(
            MotionScript(
                word=normalize_word(str(s["word"])),
                t_start=int(s["t_start"]),
                t_end=int(s["t_end"]),
                motion=_motion_from_json(s["motion"]),
                start=Quad.from_points(s["quad"]),
            )
            for s in obj["scripts"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid scenario: {exc}") from exc
    return Scenario(
        meta=meta,
        scripts=scripts,
        noise=noise,
        allow_overlap=bool(obj.get("allow_overlap", False)),
        gt_stride=int(obj.get("gt_stride", 1)),
    )
