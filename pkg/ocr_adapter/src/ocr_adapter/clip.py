"""Render a small test clip with moving words and encode it to mp4.

Used by the test suite (and handy for demos): words appear in timed
phrases, static or drifting linearly, white on a dark animated
background. The returned script records what was rendered so tests can
derive lyrics and sanity-check recognition.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import cv2
import numpy as np


@dataclass(frozen=True)
class WordScript:
    word: str
    t_start: int
    t_end: int
    origin: tuple[int, int]  # putText baseline at t_start
    velocity: tuple[float, float]  # px/frame
    scale: float


@dataclass(frozen=True)
class ClipScript:
    path: Path
    fps: float
    width: int
    height: int
    frames: int
    words: tuple[WordScript, ...]

    @property
    def lyrics_text(self) -> str:
        return " ".join(w.word for w in sorted(self.words, key=lambda w: w.t_start))


_PHRASES = (
    ("HELLO", "WORLD"),
    ("GOLDEN", "RIVER"),
    ("DANCE",),
    ("UNDER", "NEON", "SKY"),
    ("FOREVER",),
)


def make_test_clip(
    path: Union[str, Path],
    seconds: float = 5.0,
    fps: float = 12.0,
    size: tuple[int, int] = (640, 360),
    seed: int = 0,
) -> ClipScript:
    width, height = size
    frames = int(round(seconds * fps))
    rng = np.random.default_rng(seed)

    words: list[WordScript] = []
    t = 2
    span = max(8, frames // (len(_PHRASES) + 1))
    for phrase in _PHRASES:
        if t + span >= frames:
            break
        for i, word in enumerate(phrase):
            x = 40 + int(rng.integers(0, 60))
            y = 80 + 90 * i + int(rng.integers(0, 30))
            vel = (float(rng.uniform(-2.0, 2.0)), 0.0) if rng.random() < 0.5 else (0.0, 0.0)
            words.append(
                WordScript(
                    word=word,
                    t_start=t + i,
                    t_end=t + span - 1,
                    origin=(x, y),
                    velocity=vel,
                    scale=float(rng.uniform(1.1, 1.5)),
                )
            )
        t += span + 2

    path = Path(path)
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"mp4v"), fps, (width, height))
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {path}")
    try:
        for t in range(frames):
            frame = np.full((height, width, 3), 18, np.uint8)
            # slow-moving dim blob keeps the background from being constant
            cx = int(width * (0.5 + 0.4 * np.sin(t / 17.0)))
            cv2.circle(frame, (cx, height - 60), 50, (45, 40, 35), -1)
            for w in words:
                if not w.t_start <= t <= w.t_end:
                    continue
                p = t - w.t_start
                x = int(round(w.origin[0] + w.velocity[0] * p))
                y = int(round(w.origin[1] + w.velocity[1] * p))
                cv2.putText(frame, w.word, (x, y), cv2.FONT_HERSHEY_SIMPLEX, w.scale, (235, 235, 235), 3)
            writer.write(frame)
    finally:
        writer.release()
    return ClipScript(path=path, fps=fps, width=width, height=height, frames=frames, words=tuple(words))
