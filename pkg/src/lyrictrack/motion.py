"""Trajectory motion analytics: buckets, DTW, k-medoids, histograms.

Word trajectories become translation-normalized center curves in
frame-relative coordinates, are partitioned into six length buckets, and
each bucket is clustered into k representative motions by PAM-style
k-medoids over pairwise DTW distances. Every video is then described by a
normalized histogram of its curve-to-representative assignments, and the
videos themselves are clustered by k-means with the cluster count chosen
by the Calinski-Harabasz criterion.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .corpus import SchemaError, VideoMeta
from .track import Trajectory

log = logging.getLogger(__name__)


class InvalidK(ValueError):
    """Requested cluster count is impossible for the data."""


class OutOfBucketRange(ValueError):
    """Curve length falls outside every analysis bucket."""


class TooFewVideos(ValueError):
    """Video clustering needs at least 3 histograms."""


# Length buckets in frames; curves of length <= 10 or > 100 are excluded.
BUCKET_RANGES: tuple[tuple[int, int], ...] = ((11, 20), (21, 30), (31, 40), (41, 50), (51, 70), (71, 100))
K_PER_BUCKET = 10


@dataclass(frozen=True)
class MotionCurve:
    """Per-frame quad centers, frame-relative, translated to start at (0,0)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("curve must be an (n, 2) array with n >= 1")
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)

    @property
    def length(self) -> int:
        return int(self.points.shape[0])


@dataclass
class LengthBucket:
    lo: int
    hi: int
    curves: list[MotionCurve]


@dataclass(frozen=True)
class RepresentativeMotion:
    motion_id: int  # 1-based, bucket-major
    bucket: tuple[int, int]
    medoid: MotionCurve


@dataclass(frozen=True)
class MotionHistogram:
    video_id: str
    bins: np.ndarray
    total: int  # number of curves voted; 0 flags an empty (all-zero) histogram

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.float64)
        object.__setattr__(self, "bins", arr)
        arr.setflags(write=False)


def to_motion_curve(traj: Trajectory, meta: VideoMeta) -> MotionCurve:
    """Center curve of a trajectory in frame-relative coordinates."""
    if not traj.frames:
        raise ValueError("trajectory has no frames")
    centers = np.array([f.quad.center for f in traj.frames], dtype=np.float64)
    centers[:, 0] /= meta.width
    centers[:, 1] /= meta.height
    centers -= centers[0].copy()
    return MotionCurve(points=centers)


def bucket_curves(curves: Iterable[MotionCurve]) -> tuple[list[LengthBucket], int, int]:
    """Partition curves into the six length buckets.

    Returns (buckets, n_excluded_short, n_excluded_long) where short means
    length <= 10 and long means length > 100.
    """
    buckets = [LengthBucket(lo=lo, hi=hi, curves=[]) for lo, hi in BUCKET_RANGES]
    short = long = 0
    for curve in curves:
        n = curve.length
        if n <= BUCKET_RANGES[0][0] - 1:
            short += 1
        elif n > BUCKET_RANGES[-1][1]:
            long += 1
        else:
            for b in buckets:
                if b.lo <= n <= b.hi:
                    b.curves.append(curve)
                    break
    return buckets, short, long


def dtw_distance(a: MotionCurve, b: MotionCurve) -> float:
    """Classic DTW with Euclidean point cost, boundary-matched, unconstrained."""
    pa, pb = a.points, b.points
    n, m = len(pa), len(pb)
    diff = pa[:, None, :] - pb[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2)).tolist()
    row = cost[0]
    acc = [row[0]]
    for j in range(1, m):
        acc.append(acc[-1] + row[j])
    prev = acc
    for i in range(1, n):
        row = cost[i]
        cur = [prev[0] + row[0]]
        for j in range(1, m):
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[-1] < best:
                best = cur[-1]
            cur.append(row[j] + best)
        prev = cur
    return prev[-1]


def pairwise_dtw(curves: Sequence[MotionCurve]) -> np.ndarray:
    n = len(curves)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = dtw_distance(curves[i], curves[j])
    return D


@dataclass(frozen=True)
class KMedoidsResult:
    medoids: tuple[int, ...]  # point indices, ascending
    labels: np.ndarray  # position of each point's medoid in `medoids`
    cost: float
    cost_history: tuple[float, ...]


def k_medoids(dist_matrix: np.ndarray, k: int, seed: int = 0) -> KMedoidsResult:
    """PAM-style alternation over a precomputed distance matrix.

    Seeding picks one random point then greedily adds the farthest point
    from the chosen set. Each iteration assigns points to their nearest
    medoid and swaps every medoid with the in-cluster point minimizing the
    intra-cluster cost, until the total cost stops improving. All ties
    resolve toward the smaller index, so results are deterministic per
    seed.
    """
    D = np.asarray(dist_matrix, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("distance matrix must be square")
    n = D.shape[0]
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    if not np.allclose(D, D.T, atol=1e-9) or np.any(np.abs(np.diag(D)) > 1e-12):
        raise ValueError("distance matrix must be symmetric with zero diagonal")

    rng = np.random.default_rng(seed)
    medoids = [int(rng.integers(n))]
    while len(medoids) < k:
        nearest = D[:, medoids].min(axis=1)
        nearest[medoids] = -np.inf
        medoids.append(int(np.argmax(nearest)))
    medoids = sorted(medoids)

    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    while True:
        labels = np.argmin(D[:, medoids], axis=1)
        cost = float(D[np.arange(n), np.take(medoids, labels)].sum())
        history.append(cost)
        improved = False
        new_medoids = list(medoids)
        for c in range(k):
            members = np.flatnonzero(labels == c)
            if members.size == 0:
                continue
            within = D[np.ix_(members, members)].sum(axis=1)
            j = int(np.argmin(within))
            if within[j] < D[medoids[c], members].sum():
                new_medoids[c] = int(members[j])
                improved = True
        if not improved:
            break
        medoids = sorted(new_medoids)
    return KMedoidsResult(medoids=tuple(medoids), labels=labels, cost=history[-1], cost_history=tuple(history))


def build_representatives(
    buckets: Sequence[LengthBucket],
    k_per_bucket: int = K_PER_BUCKET,
    seed: int = 0,
) -> list[RepresentativeMotion]:
    """k-medoids per bucket; ids are assigned bucket-major starting at 1."""
    reps = []
    for bi, bucket in enumerate(buckets):
        n = len(bucket.curves)
        if n < k_per_bucket:
            raise InvalidK(
                f"bucket {bucket.lo}-{bucket.hi} holds {n} curves, fewer than k={k_per_bucket}"
            )
        D = pairwise_dtw(bucket.curves)
        result = k_medoids(D, k_per_bucket, seed=seed + bi)
        for j, mi in enumerate(result.medoids):
            reps.append(
                RepresentativeMotion(
                    motion_id=bi * k_per_bucket + j + 1,
                    bucket=(bucket.lo, bucket.hi),
                    medoid=bucket.curves[mi],
                )
            )
        log.debug("bucket %d-%d: %d curves -> %d medoids", bucket.lo, bucket.hi, n, k_per_bucket)
    return reps


def assign_motion(curve: MotionCurve, representatives: Sequence[RepresentativeMotion]) -> int:
    """Nearest in-bucket representative by DTW; ties to the smaller id."""
    in_bucket = [r for r in representatives if r.bucket[0] <= curve.length <= r.bucket[1]]
    if not in_bucket:
        raise OutOfBucketRange(f"curve length {curve.length} falls outside every bucket")
    in_bucket.sort(key=lambda r: r.motion_id)
    dists = [dtw_distance(curve, r.medoid) for r in in_bucket]
    return in_bucket[int(np.argmin(dists))].motion_id


def motion_histogram(
    trajectories: Sequence[Trajectory],
    representatives: Sequence[RepresentativeMotion],
    meta: VideoMeta,
) -> MotionHistogram:
    """Normalized bag-of-motions over a video's bucketable trajectories.

    Curves outside every bucket are skipped. With no bucketable curve the
    histogram is all zeros and total == 0 flags it.
    """
    nbins = len(representatives)
    bins = np.zeros(nbins, dtype=np.float64)
    total = 0
    for traj in trajectories:
        curve = to_motion_curve(traj, meta)
        try:
            mid = assign_motion(curve, representatives)
        except OutOfBucketRange:
            continue
        bins[mid - 1] += 1.0
        total += 1
    if total:
        bins /= total
    return MotionHistogram(video_id=meta.id, bins=bins, total=total)


def calinski_harabasz(X: np.ndarray, labels: np.ndarray) -> float:
    """Between/within variance ratio; +inf when the within scatter is ~0."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    n = X.shape[0]
    ids = np.unique(labels)
    k = ids.size
    mean = X.mean(axis=0)
    within = 0.0
    between = 0.0
    for c in ids:
        grp = X[labels == c]
        mu = grp.mean(axis=0)
        within += float(((grp - mu) ** 2).sum())
        between += grp.shape[0] * float(((mu - mean) ** 2).sum())
    if within <= 1e-12:
        # duplicates can collapse k-means clusters entirely; flag as degenerate
        return float("inf")
    if k < 2 or n <= k:
        raise ValueError("needs 2 <= k < n")
    return (between / (k - 1)) / (within / (n - k))


@dataclass(frozen=True)
class ClusterResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    ch_scores: dict[int, float]
    degenerate: bool


def cluster_videos(
    histograms: Sequence[MotionHistogram],
    k_range: Iterable[int] = range(2, 11),
    seed: int = 0,
) -> ClusterResult:
    """k-means over video histograms, k chosen by the CH criterion.

    Each candidate k runs k-means++ with 10 restarts from the fixed seed;
    the k maximizing the Calinski-Harabasz score wins (ties and degenerate
    +inf scores resolve to the smallest k).
    """
    from sklearn.cluster import KMeans
    from sklearn.exceptions import ConvergenceWarning

    n = len(histograms)
    if n < 3:
        raise TooFewVideos(f"need at least 3 videos, got {n}")
    X = np.stack([h.bins for h in histograms])
    ks = [k for k in k_range if 2 <= k <= n - 1]
    if not ks:
        raise TooFewVideos(f"no candidate k in range fits {n} videos")
    scores: dict[int, float] = {}
    models = {}
    for k in ks:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            warnings.filterwarnings("ignore", message=".*smaller than n_clusters.*")
            km = KMeans(n_clusters=k, init="k-means++", n_init=10, random_state=seed).fit(X)
        scores[k] = calinski_harabasz(X, km.labels_)
        models[k] = km
    chosen = max(ks, key=lambda k: (scores[k], -k))
    km = models[chosen]
    degenerate = not np.isfinite(scores[chosen])
    if degenerate:
        log.warning("degenerate clustering: zero within-cluster scatter, defaulting to k=%d", chosen)
    return ClusterResult(
        k=chosen,
        labels=km.labels_.copy(),
        centroids=km.cluster_centers_.copy(),
        ch_scores=scores,
        degenerate=degenerate,
    )


def mean_histograms(labels: Sequence[int], histograms: Sequence[MotionHistogram]) -> dict[int, np.ndarray]:
    """Arithmetic mean histogram per cluster."""
    if len(labels) != len(histograms):
        raise ValueError("labels and histograms must align")
    out: dict[int, np.ndarray] = {}
    for c in sorted(set(int(c) for c in labels)):
        members = [h.bins for h, lab in zip(histograms, labels) if int(lab) == c]
        out[c] = np.mean(members, axis=0)
    return out


# ---------------------------------------------------------------------------
# analysis artifact IO


def write_representatives(reps: Sequence[RepresentativeMotion], path: Union[str, Path]) -> None:
    obj = {
        "representatives": [
            {
                "motion_id": r.motion_id,
                "bucket": [r.bucket[0], r.bucket[1]],
                "curve": [[float(x), float(y)] for x, y in r.medoid.points],
            }
            for r in reps
        ]
    }
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def load_representatives(path: Union[str, Path]) -> list[RepresentativeMotion]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "representatives" not in obj:
        raise SchemaError('representatives file must have key "representatives"')
    reps = []
    for rec in obj["representatives"]:
        reps.append(
            RepresentativeMotion(
                motion_id=int(rec["motion_id"]),
                bucket=(int(rec["bucket"][0]), int(rec["bucket"][1])),
                medoid=MotionCurve(points=np.asarray(rec["curve"], dtype=np.float64)),
            )
        )
    return reps


def write_histograms_csv(histograms: Sequence[MotionHistogram], path: Union[str, Path]) -> None:
    nbins = len(histograms[0].bins) if histograms else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id"] + [f"m{i}" for i in range(1, nbins + 1)])
        for h in histograms:
            writer.writerow([h.video_id] + [repr(float(v)) for v in h.bins])


def load_histograms_csv(path: Union[str, Path]) -> list[MotionHistogram]:
    out = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "video_id":
            raise SchemaError("histograms csv must start with a video_id column")
        for row in reader:
            bins = np.asarray([float(v) for v in row[1:]], dtype=np.float64)
            total = 1 if bins.sum() > 0 else 0
            out.append(MotionHistogram(video_id=row[0], bins=bins, total=total))
    return out


def write_mean_histograms_csv(means: dict[int, np.ndarray], path: Union[str, Path]) -> None:
    nbins = len(next(iter(means.values()))) if means else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster"] + [f"m{i}" for i in range(1, nbins + 1)])
        for c in sorted(means):
            writer.writerow([c] + [repr(float(v)) for v in means[c]])


def load_mean_histograms_csv(path: Union[str, Path]) -> dict[int, np.ndarray]:
    out: dict[int, np.ndarray] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "cluster":
            raise SchemaError("mean histograms csv must start with a cluster column")
        for row in reader:
            out[int(row[0])] = np.asarray([float(v) for v in row[1:]], dtype=np.float64)
    return out


def write_clusters(result: ClusterResult, video_ids: Sequence[str], path: Union[str, Path]) -> None:
    obj = {
        "k": result.k,
        "degenerate": result.degenerate,
        "ch_scores": {str(k): (v if np.isfinite(v) else None) for k, v in sorted(result.ch_scores.items())},
        "assignments": {vid: int(lab) for vid, lab in zip(video_ids, result.labels)},
    }
    Path(path).write_text(json.dumps(obj, separators=(",", ":")) + "\n", encoding="utf-8")


def load_clusters(path: Union[str, Path]) -> dict:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = {"k", "ch_scores", "assignments"} - obj.keys()
    if missing:
        raise SchemaError(f"clusters file missing keys {sorted(missing)}")
    return obj
