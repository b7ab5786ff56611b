"""Word-frame distances and the globally optimal lyric-frame matching.

The matcher assigns every lyric word k a single frame t so that frames
strictly increase with k, consecutive anchors are at most `delta` frames
apart, and the summed word-frame distance along the assignment is minimal.
Accumulation over the candidate window can run two ways:

  method="window"  sliding-window minimum, O(1) amortized per cell
  method="scan"    re-scans the whole window per cell (the reference form)

Both produce identical accumulated costs and anchors; the scan form exists
as the oracle the optimized form is tested against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import json

import numpy as np

from .corpus import Detection, FrameDetections, LyricSequence, LyricWord

log = logging.getLogger(__name__)


class InfeasiblePath(ValueError):
    """No strictly increasing assignment satisfies the gap constraint."""


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _bounded_edit_distance(a: str, b: str, bound: int) -> int:
    """Levenshtein distance if <= bound, else bound + 1.

    Abandons the row scan as soon as every cell exceeds the bound, which is
    the dominant saving when matching one word against many boxes.
    """
    if bound < 0:
        return bound + 1
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if len(a) - len(b) > bound:
        return bound + 1
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        row_min = i
        for j, cb in enumerate(b, start=1):
            v = min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb))
            cur.append(v)
            if v < row_min:
                row_min = v
        if row_min > bound:
            return bound + 1
        prev = cur
    return prev[-1] if prev[-1] <= bound else bound + 1


def frame_word_distance(
    word: LyricWord,
    frame: FrameDetections,
    cache: Optional[dict] = None,
) -> tuple[int, Optional[Detection]]:
    """Minimum edit distance from a lyric word to any box of a frame.

    Returns (distance, minimizing box). For a frame without boxes the
    distance falls back to the word length (edit distance to the empty
    string) and the box is None. Ties keep the first box in frame order.
    """
    if not frame.boxes:
        return len(word.text), None
    best: Optional[int] = None
    best_box: Optional[Detection] = None
    for box in frame.boxes:
        if cache is not None:
            key = (word.text, box.text)
            d = cache.get(key)
            if d is None:
                bound = len(word.text) + len(box.text) if best is None else best - 1
                d = _bounded_edit_distance(word.text, box.text, bound)
                if best is None or d <= bound:
                    cache[key] = d
                else:
                    d = None
        else:
            bound = len(word.text) + len(box.text) if best is None else best - 1
            d = _bounded_edit_distance(word.text, box.text, bound)
            if best is not None and d > bound:
                d = None
        if d is not None and (best is None or d < best):
            best = d
            best_box = box
            if best == 0:
                break
    assert best is not None
    return best, best_box


@dataclass(frozen=True)
class DistanceRow:
    """Distances of one lyric word against every frame."""

    k: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


@dataclass(frozen=True)
class Anchor:
    k: int
    word: str
    t: int
    cost: int
    box: Optional[Detection] = None


@dataclass(frozen=True)
class MatchResult:
    anchors: tuple[Anchor, ...]
    total_cost: int


def match_cost_matrix(lyrics: LyricSequence, frames: Sequence[FrameDetections]) -> list[DistanceRow]:
    """Distance of every (word, frame) pair, one row per lyric word.

    Edit distances are memoized on unique (word text, recognized text)
    pairs, so repeated recognition results across frames cost one
    computation.
    """
    cache: dict = {}
    rows = []
    per_word = [np.empty(len(frames), dtype=np.int64) for _ in lyrics.words]
    for ti, frame in enumerate(frames):
        for wi, word in enumerate(lyrics.words):
            d, _ = frame_word_distance(word, frame, cache)
            per_word[wi][ti] = d
    for word, values in zip(lyrics.words, per_word):
        rows.append(DistanceRow(k=word.k, values=values))
    return rows


def cost_matrix_array(rows: Sequence[DistanceRow]) -> np.ndarray:
    return np.stack([np.asarray(r.values) for r in rows])


def _trailing_window_min(values: np.ndarray, width: int) -> np.ndarray:
    """m[i] = min(values[max(0, i-width+1) : i+1]) in O(n) via block mins."""
    n = values.size
    if width >= n:
        return np.minimum.accumulate(values)
    nb = -(-n // width)
    padded = np.full(nb * width, np.inf)
    padded[:n] = values
    blocks = padded.reshape(nb, width)
    prefix = np.minimum.accumulate(blocks, axis=1).ravel()
    suffix = np.minimum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    out = prefix[:n].copy()
    idx = np.arange(width - 1, n)
    out[idx] = np.minimum(suffix[idx - width + 1], prefix[idx])
    return out


def accumulate_costs(
    costs: np.ndarray,
    delta: int,
    method: str = "window",
    window_starts: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Accumulated matching cost g for every (word, frame) cell.

    g[0] = costs[0]; g[k, t] = costs[k, t] + min(g[k-1, lo:t]) where lo is
    t - delta for contiguous frames, or `window_starts[t]` when the frame
    records are strided. Cells with no feasible predecessor hold +inf.
    """
    D = np.asarray(costs, dtype=np.float64)
    if D.ndim != 2:
        raise ValueError("cost matrix must be 2-D (words x frames)")
    K, T = D.shape
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    if method not in ("window", "scan"):
        raise ValueError(f"unknown accumulation method {method!r}")
    if window_starts is not None and method == "window":
        raise ValueError("strided windows require method='scan'")
    g = np.empty_like(D)
    g[0] = D[0]
    w = np.empty(T)
    for k in range(1, K):
        prev = g[k - 1]
        if method == "window":
            m = _trailing_window_min(prev, delta)
            w[0] = np.inf
            w[1:] = m[:-1]
        else:
            for t in range(T):
                lo = int(window_starts[t]) if window_starts is not None else max(0, t - delta)
                w[t] = prev[lo:t].min() if t > lo else np.inf
        np.add(D[k], w, out=g[k])
    return g


def _backtrack(
    g: np.ndarray,
    delta: int,
    window_starts: Optional[np.ndarray] = None,
) -> tuple[list[int], float]:
    """Reconstruct the minimum-cost path, breaking ties toward smaller t."""
    K, T = g.shape
    t = int(np.argmin(g[K - 1]))
    total = float(g[K - 1, t])
    if not np.isfinite(total):
        raise InfeasiblePath("gap constraint admits no full assignment")
    path = [t]
    for k in range(K - 1, 0, -1):
        t = path[-1]
        lo = int(window_starts[t]) if window_starts is not None else max(0, t - delta)
        seg = g[k - 1, lo:t]
        path.append(lo + int(np.argmin(seg)))
    path.reverse()
    return path, total


def match_from_costs(
    costs: np.ndarray,
    delta: int = 1000,
    method: str = "window",
    words: Optional[Sequence[str]] = None,
) -> MatchResult:
    """Optimal assignment given an explicit (words x frames) cost matrix."""
    D = np.asarray(costs)
    K, T = D.shape
    if K < 1:
        raise ValueError("need at least one lyric word")
    if T < K:
        raise InfeasiblePath(f"{T} frames cannot host {K} strictly increasing anchors")
    g = accumulate_costs(D, delta, method=method)
    path, total = _backtrack(g, delta)
    texts = list(words) if words is not None else [""] * K
    anchors = tuple(
        Anchor(k=k + 1, word=texts[k], t=path[k], cost=int(D[k, path[k]])) for k in range(K)
    )
    return MatchResult(anchors=anchors, total_cost=int(round(total)))


def lyric_frame_match(
    lyrics: LyricSequence,
    frames: Sequence[FrameDetections],
    delta: int = 1000,
) -> MatchResult:
    """Assign every lyric word its most confident frame (see module doc).

    Frame records may be strided (t values with gaps); the gap constraint
    applies to the true t values. Anchors carry the minimizing box of
    their frame when the frame has any box.
    """
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    K, T = lyrics.K, len(frames)
    if T < K:
        raise InfeasiblePath(f"{T} frame records cannot host {K} strictly increasing anchors")
    ts = np.asarray([f.t for f in frames], dtype=np.int64)
    if np.any(np.diff(ts) <= 0):
        raise ValueError("frame records must have strictly increasing t")
    contiguous = bool(ts[-1] - ts[0] == T - 1)

    rows = match_cost_matrix(lyrics, frames)
    D = cost_matrix_array(rows)
    if contiguous:
        g = accumulate_costs(D, delta, method="window")
        path, total = _backtrack(g, delta)
    else:
        starts = np.searchsorted(ts, ts - delta, side="left")
        g = accumulate_costs(D, delta, method="scan", window_starts=starts)
        path, total = _backtrack(g, delta, window_starts=starts)

    anchors = []
    for wi, word in enumerate(lyrics.words):
        pos = path[wi]
        cost, box = frame_word_distance(word, frames[pos])
        anchors.append(Anchor(k=word.k, word=word.text, t=int(ts[pos]), cost=cost, box=box))
    log.debug("matched %d words over %d frames, total cost %d", K, T, int(round(total)))
    return MatchResult(anchors=tuple(anchors), total_cost=int(round(total)))


def write_anchors(result: MatchResult, video_id: str, delta: int, path: Union[str, Path]) -> None:
    """Write anchors.json: {"video","delta","anchors":[{k,word,t,cost}],"total_cost"}."""
    obj = {
        "video": video_id,
        "delta": delta,
        "anchors": [{"k": a.k, "word": a.word, "t": a.t, "cost": a.cost} for a in result.anchors],
        "total_cost": result.total_cost,
    }
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def load_anchors(path: Union[str, Path]) -> tuple[str, int, MatchResult]:
    from .corpus import SchemaError

    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("video", "delta", "anchors", "total_cost"):
        if key not in obj:
            raise SchemaError(f"anchors file missing key {key!r}")
    anchors = tuple(
        Anchor(k=int(a["k"]), word=str(a["word"]), t=int(a["t"]), cost=int(a["cost"]))
        for a in obj["anchors"]
    )
    return str(obj["video"]), int(obj["delta"]), MatchResult(anchors=anchors, total_cost=int(obj["total_cost"]))
