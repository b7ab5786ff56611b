"""Template-matching word recognizer for clean rendered text.

Rectifies each quad to a horizontal strip, splits it into glyph blobs by
connected components, and scores every blob against glyph templates
rendered from the same Hershey font family by cosine similarity on
aspect-preserving 40x40 patches. Meant as the default recognizer for
synthetic and screen-rendered footage; heavier recognizers register under
their own id.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import cv2
import numpy as np

Recognizer = Callable[[np.ndarray, np.ndarray], tuple[str, float]]

CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789'"
_PATCH = 40
_MIN_BLOB_AREA = 12


def _norm_patch(img: np.ndarray) -> np.ndarray:
    """Binary image -> PATCH x PATCH float patch, aspect preserved, centered."""
    h, w = img.shape
    scale = (_PATCH - 4) / max(h, w)
    nw, nh = max(1, round(w * scale)), max(1, round(h * scale))
    resized = cv2.resize(img, (nw, nh), interpolation=cv2.INTER_AREA)
    out = np.zeros((_PATCH, _PATCH), np.float32)
    y0, x0 = (_PATCH - nh) // 2, (_PATCH - nw) // 2
    out[y0 : y0 + nh, x0 : x0 + nw] = resized.astype(np.float32) / 255.0
    return out


@lru_cache(maxsize=1)
def _templates() -> dict[str, np.ndarray]:
    out = {}
    for ch in CHARSET:
        canvas = np.zeros((80, 80), np.uint8)
        cv2.putText(canvas, ch, (10, 64), cv2.FONT_HERSHEY_SIMPLEX, 1.6, 255, 3)
        ys, xs = np.nonzero(canvas)
        crop = canvas[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
        out[ch] = _norm_patch(crop)
    return out


_RECTIFY_MARGIN = 6


def _rectify(gray: np.ndarray, quad: np.ndarray, margin: int = _RECTIFY_MARGIN) -> np.ndarray:
    """Warp the quad region plus a background margin to an upright strip."""
    q = np.asarray(quad, dtype=np.float32)
    # order corners: two leftmost by x make the left edge
    order = np.argsort(q[:, 0])
    left, right = q[order[:2]], q[order[2:]]
    tl, bl = left[np.argsort(left[:, 1])]
    tr, br = right[np.argsort(right[:, 1])]
    w = int(max(np.hypot(*(tr - tl)), np.hypot(*(br - bl)), 1))
    h = int(max(np.hypot(*(bl - tl)), np.hypot(*(br - tr)), 1))
    src = np.stack([tl, tr, br, bl])
    m = float(margin)
    dst = np.array(
        [[m, m], [w + m, m], [w + m, h + m], [m, h + m]], dtype=np.float32
    )
    matrix = cv2.getPerspectiveTransform(src, dst)
    return cv2.warpPerspective(
        gray, matrix, (w + 2 * margin, h + 2 * margin), borderMode=cv2.BORDER_REPLICATE
    )


def _binarize_text(strip: np.ndarray) -> np.ndarray:
    """Otsu split with text as foreground.

    The strip carries a background margin, so the class whose mean
    intensity sits farther from the border mean is the text.
    """
    _, binary = cv2.threshold(strip, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    ring = np.concatenate([strip[0], strip[-1], strip[:, 0], strip[:, -1]]).astype(np.float32)
    ring_mean = float(ring.mean())
    fg = binary > 0
    if not fg.any() or fg.all():
        return binary
    fg_dist = abs(float(strip[fg].mean()) - ring_mean)
    bg_dist = abs(float(strip[~fg].mean()) - ring_mean)
    if bg_dist > fg_dist:
        return cv2.bitwise_not(binary)
    return binary


def recognize_template(gray: np.ndarray, quad: np.ndarray) -> tuple[str, float]:
    """(recognized text, confidence in [0,1]) for one detected quad."""
    strip = _rectify(gray, quad)
    if strip.size == 0:
        return "", 0.0
    binary = _binarize_text(strip)
    n, _, stats, _ = cv2.connectedComponentsWithStats(binary, 8)
    blobs = [tuple(s) for s in stats[1:] if s[4] >= _MIN_BLOB_AREA]
    blobs.sort(key=lambda s: s[0])
    templates = _templates()
    chars = []
    scores = []
    for x, y, w, h, _area in blobs:
        patch = _norm_patch(binary[y : y + h, x : x + w])
        denom = float(np.linalg.norm(patch))
        best_ch, best_s = "", -1.0
        for ch, tpl in templates.items():
            s = float((patch * tpl).sum()) / (denom * float(np.linalg.norm(tpl)) + 1e-9)
            if s > best_s:
                best_ch, best_s = ch, s
        chars.append(best_ch)
        scores.append(best_s)
    if not chars:
        return "", 0.0
    confidence = float(np.clip(np.mean(scores), 0.0, 1.0))
    return "".join(chars), confidence


RECOGNIZERS: dict[str, Recognizer] = {
    "template": recognize_template,
}
