"""Score predicted boxes/trajectories against ground-truth frames.

A prediction hits a ground-truth box when both carry the same normalized
word and their polygon IoU exceeds the threshold (default 0.5, strict).
When several predictions clear the threshold on one ground-truth box, only
the highest-IoU one counts; each side matches at most once. Unmatched
predictions are false positives, unmatched ground-truth boxes false
negatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import geometry
from .corpus import GTFrame, Quad
from .track import TrackSource, Trajectory


class MissingGT(ValueError):
    """Ground truth is absent or refers to frames outside the video."""


MODES = {
    "MA": frozenset({TrackSource.DETECTED}),
    "MA+TR": frozenset({TrackSource.DETECTED, TrackSource.SEARCHED}),
    "MA+TR+IN": frozenset({TrackSource.DETECTED, TrackSource.SEARCHED, TrackSource.INTERPOLATED}),
}


@dataclass(frozen=True)
class FrameCounts:
    t: int
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float  # percent, unrounded
    recall: float  # percent, unrounded
    f_measure: float  # fraction in [0,1], unrounded
    per_frame: tuple[FrameCounts, ...] = ()

    def rounded(self) -> tuple[float, float, float]:
        """(P, R, F) at reporting precision: 2 decimals for P/R, 4 for F."""
        return round(self.precision, 2), round(self.recall, 2), round(self.f_measure, 4)

    def to_dict(self, mode: Optional[str] = None) -> dict:
        p, r, f = self.rounded()
        out = {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": p, "recall": r, "f": f}
        if mode is not None:
            out["mode"] = mode
        return out


def match_frame(
    pred: Sequence[tuple[Quad, str]],
    gt: Sequence[tuple[Quad, str]],
    iou_threshold: float = 0.5,
) -> tuple[int, int, int]:
    """Greedy same-word matching of one frame; returns (tp, fp, fn).

    Ground-truth boxes are resolved in descending order of their best
    available IoU (ties by ground-truth index, then prediction index),
    which makes the outcome independent of input ordering.
    """
    candidates: list[list[tuple[float, int]]] = []
    best_iou = []
    for gq, gtext in gt:
        cands = []
        for pi, (pq, ptext) in enumerate(pred):
            if ptext != gtext:
                continue
            ov = geometry.iou(pq.vertices, gq.vertices)
            if ov > iou_threshold:
                cands.append((ov, pi))
        cands.sort(key=lambda c: (-c[0], c[1]))
        candidates.append(cands)
        best_iou.append(cands[0][0] if cands else 0.0)
    order = sorted(range(len(gt)), key=lambda j: (-best_iou[j], j))
    taken: set[int] = set()
    tp = 0
    for j in order:
        for ov, pi in candidates[j]:
            if pi not in taken:
                taken.add(pi)
                tp += 1
                break
    return tp, len(pred) - tp, len(gt) - tp


def metrics(tp: int, fp: int, fn: int, per_frame: Iterable[FrameCounts] = ()) -> EvalReport:
    """Precision/recall percentages and F-measure from raw counts.

    Zero denominators report 0 rather than raising, so empty videos do not
    crash batch evaluation.
    """
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else 0.0
    p, r = precision / 100.0, recall / 100.0
    f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return EvalReport(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f_measure=f, per_frame=tuple(per_frame))


def evaluate_video(
    trajectories: Sequence[Trajectory],
    gt: Sequence[GTFrame],
    mode: str = "MA+TR+IN",
    iou_threshold: float = 0.5,
    frame_count: Optional[int] = None,
) -> EvalReport:
    """Aggregate match_frame over every annotated frame.

    `mode` controls which trajectory frames count as predictions:
    "MA" anchors only, "MA+TR" anchors plus searched frames, "MA+TR+IN"
    the full trajectories.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {sorted(MODES)}, got {mode!r}")
    if not gt:
        raise MissingGT("ground truth contains no annotated frames")
    if frame_count is not None:
        bad = [f.t for f in gt if not 0 <= f.t < frame_count]
        if bad:
            raise MissingGT(f"annotated frames outside video range: {bad[:5]}")
    allowed = MODES[mode]
    preds_by_t: dict[int, list[tuple[Quad, str]]] = {}
    for traj in trajectories:
        for fr in traj.frames:
            if fr.source in allowed:
                preds_by_t.setdefault(fr.t, []).append((fr.quad, traj.word))
    tp = fp = fn = 0
    per_frame = []
    for gframe in gt:
        pred = preds_by_t.get(gframe.t, [])
        gt_boxes = [(b.quad, b.text) for b in gframe.boxes]
        ftp, ffp, ffn = match_frame(pred, gt_boxes, iou_threshold)
        tp += ftp
        fp += ffp
        fn += ffn
        per_frame.append(FrameCounts(t=gframe.t, tp=ftp, fp=ffp, fn=ffn))
    return metrics(tp, fp, fn, per_frame)


def write_metrics(report: EvalReport, mode: str, path: Union[str, Path]) -> None:
    """Write metrics.json: {"tp","fp","fn","precision","recall","f","mode"}."""
    Path(path).write_text(json.dumps(report.to_dict(mode), separators=(",", ":")) + "\n", encoding="utf-8")
