"""Classical word-region detectors.

A detector maps a grayscale frame to a list of 4-point quads (float32
(4,2) arrays from cv2.boxPoints). Both built-ins binarize the frame,
merge glyphs into word blobs with a wide closing kernel, and fit rotated
rectangles; they differ in the binarization step. Neural detectors can be
plugged in by registering a callable under a new id.
"""

from __future__ import annotations

from typing import Callable

import cv2
import numpy as np

Detector = Callable[[np.ndarray], list[np.ndarray]]

_MIN_AREA = 80.0
_MIN_SIDE = 6.0
_MERGE_KERNEL = (25, 7)
# candidate regions must stand out from the frame; rejects low-contrast
# blobs and compression ghosts
_MIN_CONTRAST = 60.0


def _word_quads(binary: np.ndarray, gray: np.ndarray) -> list[np.ndarray]:
    kernel = cv2.getStructuringElement(cv2.MORPH_RECT, _MERGE_KERNEL)
    merged = cv2.morphologyEx(binary, cv2.MORPH_CLOSE, kernel)
    contours, _ = cv2.findContours(merged, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    frame_median = float(np.median(gray))
    quads = []
    for contour in contours:
        rect = cv2.minAreaRect(contour)
        (_, _), (w, h), _ = rect
        if w * h < _MIN_AREA or min(w, h) < _MIN_SIDE:
            continue
        x, y, bw, bh = cv2.boundingRect(contour)
        sel = binary[y : y + bh, x : x + bw] > 0
        if not sel.any():
            continue
        contrast = abs(float(gray[y : y + bh, x : x + bw][sel].mean()) - frame_median)
        if contrast < _MIN_CONTRAST:
            continue
        quads.append(cv2.boxPoints(rect))
    quads.sort(key=lambda q: (float(q[:, 1].min()), float(q[:, 0].min())))
    return quads


def _foreground(binary: np.ndarray) -> np.ndarray:
    # text is the minority class; flip when the threshold picked background
    if np.count_nonzero(binary) > binary.size // 2:
        return cv2.bitwise_not(binary)
    return binary


def detect_otsu(gray: np.ndarray) -> list[np.ndarray]:
    _, binary = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    return _word_quads(_foreground(binary), gray)


def detect_adaptive(gray: np.ndarray) -> list[np.ndarray]:
    binary = cv2.adaptiveThreshold(
        gray, 255, cv2.ADAPTIVE_THRESH_MEAN_C, cv2.THRESH_BINARY, 31, -12
    )
    return _word_quads(_foreground(binary), gray)


DETECTORS: dict[str, Detector] = {
    "otsu-contour": detect_otsu,
    "adaptive-contour": detect_adaptive,
}
