"""Independent oracles the implementation is tested against.

Everything here is deliberately naive: plain recursion and exhaustive
enumeration, kept free of the library's data structures and shortcuts.
"""

from __future__ import annotations

import math

import numpy as np


def brute_levenshtein(a: str, b: str) -> int:
    """Textbook recursive edit distance, no memoization."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        brute_levenshtein(a[:-1], b) + 1,
        brute_levenshtein(a, b[:-1]) + 1,
        brute_levenshtein(a[:-1], b[:-1]) + (a[-1] != b[-1]),
    )


def enumerate_best_path(D: np.ndarray, delta: int) -> tuple[float, tuple[int, ...]]:
    """Best strictly increasing assignment by exhaustive enumeration.

    Feasible paths pick one frame per word with 1 <= t_k - t_{k-1} <= delta.
    Among minimum-cost paths the winner minimizes (t_K, t_{K-1}, ..., t_1)
    lexicographically, mirroring the matcher's smallest-t tie rule.
    """
    K, T = D.shape
    best: list = [math.inf, None]

    def recurse(k: int, prev_t: int, cost: float, path: list[int]) -> None:
        if k == K:
            key = (cost, tuple(reversed(path)))
            if best[1] is None or key < (best[0], best[1]):
                best[0], best[1] = cost, tuple(reversed(path))
            return
        lo = 0 if k == 0 else prev_t + 1
        hi = T if k == 0 else min(T, prev_t + delta + 1)
        for t in range(lo, hi):
            recurse(k + 1, t, cost + float(D[k, t]), path + [t])

    recurse(0, -1, 0.0, [])
    if best[1] is None:
        return math.inf, ()
    return best[0], tuple(reversed(best[1]))


def brute_dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum warping-path cost by enumerating every monotone path."""
    n, m = len(a), len(b)
    cost = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
    best = [math.inf]

    def recurse(i: int, j: int, acc: float) -> None:
        acc += cost[i, j]
        if i == n - 1 and j == m - 1:
            best[0] = min(best[0], acc)
            return
        if i + 1 < n:
            recurse(i + 1, j, acc)
        if j + 1 < m:
            recurse(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            recurse(i + 1, j + 1, acc)

    recurse(0, 0, 0.0)
    return best[0]


def random_convex_quad(rng: np.random.Generator, center=(0.0, 0.0), scale: float = 1.0):
    """Four uniform points in convex position, counter-clockwise.

    Rejection-samples until the four points form a convex quadrilateral.
    """
    cx, cy = center
    while True:
        pts = rng.uniform(-scale, scale, size=(4, 2))
        hull = _convex_hull(pts)
        if len(hull) == 4:
            return [(cx + x, cy + y) for x, y in hull]


def _convex_hull(pts: np.ndarray) -> list[tuple[float, float]]:
    points = sorted(map(tuple, pts))
    def half(points):
        out = []
        for p in points:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out
    lower = half(points)
    upper = half(reversed(points))
    return lower[:-1] + upper[:-1]


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monte_carlo_iou(quad_a, quad_b, n_samples: int = 100_000, seed: int = 0) -> float:
    """IoU estimated by uniform point sampling over the joint bounding box."""
    rng = np.random.default_rng(seed)
    all_pts = list(quad_a) + list(quad_b)
    xs = [p[0] for p in all_pts]
    ys = [p[1] for p in all_pts]
    px = rng.uniform(min(xs), max(xs), n_samples)
    py = rng.uniform(min(ys), max(ys), n_samples)

    def inside(quad):
        ok = np.ones(n_samples, dtype=bool)
        nv = len(quad)
        for i in range(nv):
            ax, ay = quad[i]
            bx, by = quad[(i + 1) % nv]
            ok &= (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0
        return ok

    in_a = inside(quad_a)
    in_b = inside(quad_b)
    either = np.count_nonzero(in_a | in_b)
    if either == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / either
