import math

import numpy as np
import pytest
from sklearn.metrics import calinski_harabasz_score

from lyrictrack import motion
from lyrictrack.corpus import Quad, VideoMeta
from lyrictrack.geometry import rect_vertices
from lyrictrack.motion import (
    BUCKET_RANGES,
    InvalidK,
    MotionCurve,
    MotionHistogram,
    OutOfBucketRange,
    RepresentativeMotion,
    TooFewVideos,
    assign_motion,
    bucket_curves,
    build_representatives,
    cluster_videos,
    dtw_distance,
    k_medoids,
    mean_histograms,
    motion_histogram,
    to_motion_curve,
)
from lyrictrack.track import TrackedFrame, TrackSource, Trajectory

from helpers import brute_dtw

META = VideoMeta(id="vid", fps=24.0, width=1920, height=1080, frames=500)


def traj_from_centers(centers, word="W"):
    frames = tuple(
        TrackedFrame(t=t, quad=Quad(rect_vertices(cx, cy, 60, 30, 0.0)), source=TrackSource.DETECTED)
        for t, (cx, cy) in enumerate(centers)
    )
    return Trajectory(k=1, word=word, anchor_t=0, frames=frames)


def curve(points):
    return MotionCurve(points=np.asarray(points, dtype=np.float64))


def line_curve(n, step=(0.01, 0.0)):
    return curve([(step[0] * i, step[1] * i) for i in range(n)])


def static_curve(n):
    return curve([(0.0, 0.0)] * n)


class TestToMotionCurve:
    def test_static_word(self):
        c = to_motion_curve(traj_from_centers([(500, 300)] * 15), META)
        assert c.length == 15
        assert np.allclose(c.points, 0.0)

    def test_uniform_motion_normalized_by_width(self):
        centers = [(100 + 19.2 * i, 400) for i in range(5)]
        c = to_motion_curve(traj_from_centers(centers), META)
        assert np.allclose(np.diff(c.points[:, 0]), 0.01)
        assert np.allclose(c.points[:, 1], 0.0)

    def test_starts_at_origin(self):
        centers = [(700 + 3 * i, 200 + 5 * i) for i in range(12)]
        c = to_motion_curve(traj_from_centers(centers), META)
        assert tuple(c.points[0]) == (0.0, 0.0)

    def test_circular_script_matches_analytic_circle(self):
        r, width, height = 80.0, META.width, META.height
        centers = [(900 + r * (math.cos(math.radians(4 * i)) - 1), 500 + r * math.sin(math.radians(4 * i))) for i in range(20)]
        c = to_motion_curve(traj_from_centers(centers), META)
        expected = np.array(
            [(r * (math.cos(math.radians(4 * i)) - 1) / width, r * math.sin(math.radians(4 * i)) / height) for i in range(20)]
        )
        assert np.allclose(c.points, expected, atol=1e-12)


class TestBuckets:
    @pytest.mark.parametrize(
        "length,expected",
        [
            (10, "short"), (11, (11, 20)), (20, (11, 20)), (21, (21, 30)),
            (30, (21, 30)), (31, (31, 40)), (41, (41, 50)), (50, (41, 50)),
            (51, (51, 70)), (70, (51, 70)), (71, (71, 100)), (100, (71, 100)),
            (101, "long"),
        ],
    )
    def test_boundaries(self, length, expected):
        buckets, short, long_ = bucket_curves([static_curve(length)])
        if expected == "short":
            assert (short, long_) == (1, 0)
        elif expected == "long":
            assert (short, long_) == (0, 1)
        else:
            placed = [(b.lo, b.hi) for b in buckets if b.curves]
            assert placed == [expected]

    def test_partition_exhaustive(self):
        curves = [static_curve(n) for n in range(1, 130)]
        buckets, short, long_ = bucket_curves(curves)
        total = sum(len(b.curves) for b in buckets) + short + long_
        assert total == len(curves)
        assert short == 10 and long_ == 29

    def test_ranges_are_the_published_six(self):
        assert BUCKET_RANGES == ((11, 20), (21, 30), (31, 40), (41, 50), (51, 70), (71, 100))


class TestDTW:
    def test_identical_zero(self):
        c = line_curve(6)
        assert dtw_distance(c, c) == 0.0

    def test_single_pair_euclidean(self):
        assert dtw_distance(curve([(0, 0)]), curve([(3, 4)])) == 5.0

    def test_two_vs_three_points(self):
        a = curve([(0, 0), (1, 0)])
        b = curve([(0, 0), (1, 0), (2, 0)])
        expected = brute_dtw(a.points, b.points)
        assert dtw_distance(a, b) == pytest.approx(expected, abs=1e-12)
        assert expected == 1.0

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            a = curve(rng.normal(size=(int(rng.integers(1, 7)), 2)))
            b = curve(rng.normal(size=(int(rng.integers(1, 7)), 2)))
            assert dtw_distance(a, b) == pytest.approx(brute_dtw(a.points, b.points), abs=1e-12)

    def test_symmetric_nonnegative(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = curve(rng.normal(size=(int(rng.integers(1, 9)), 2)))
            b = curve(rng.normal(size=(int(rng.integers(1, 9)), 2)))
            d = dtw_distance(a, b)
            assert d >= 0
            assert d == pytest.approx(dtw_distance(b, a), abs=1e-12)


class TestKMedoids:
    def test_three_point_line(self):
        D = np.array([[0, 1, 10], [1, 0, 9], [10, 9, 0]], dtype=float)
        res = k_medoids(D, 1, seed=0)
        assert res.medoids == (1,)
        assert res.cost == 10.0

    def test_k_equals_n(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(6, 2))
        D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
        res = k_medoids(D, 6, seed=4)
        assert res.medoids == tuple(range(6))
        assert res.cost == 0.0

    def test_cost_history_non_increasing(self):
        rng = np.random.default_rng(8)
        for trial in range(30):
            n = int(rng.integers(4, 24))
            A = rng.random((n, n))
            D = (A + A.T) / 2
            np.fill_diagonal(D, 0.0)
            res = k_medoids(D, int(rng.integers(1, min(n, 6))), seed=trial)
            hist = res.cost_history
            assert all(a >= b - 1e-12 for a, b in zip(hist, hist[1:]))

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(2)
        A = rng.random((12, 12))
        D = (A + A.T) / 2
        np.fill_diagonal(D, 0.0)
        r1 = k_medoids(D, 3, seed=9)
        r2 = k_medoids(D, 3, seed=9)
        assert r1.medoids == r2.medoids
        assert np.array_equal(r1.labels, r2.labels)

    def test_invalid_k(self):
        D = np.zeros((3, 3))
        with pytest.raises(InvalidK):
            k_medoids(D, 0)
        with pytest.raises(InvalidK):
            k_medoids(D, 4)

    def test_asymmetric_rejected(self):
        D = np.array([[0, 1], [2, 0]], dtype=float)
        with pytest.raises(ValueError):
            k_medoids(D, 1)


def make_bucket_curves(per_bucket=12, seed=0):
    """Curves covering all six buckets with distinguishable motion shapes."""
    rng = np.random.default_rng(seed)
    curves = []
    for lo, hi in BUCKET_RANGES:
        for i in range(per_bucket):
            n = int(rng.integers(lo, hi + 1))
            kind = i % 3
            if kind == 0:
                c = static_curve(n)
            elif kind == 1:
                c = line_curve(n, step=(0.004 * (1 + i % 2), 0.0))
            else:
                c = curve([(0.01 * math.cos(0.2 * j) - 0.01, 0.01 * math.sin(0.2 * j)) for j in range(n)])
            curves.append(c)
    return curves


class TestRepresentatives:
    def test_sixty_ids_bucket_major(self):
        buckets, _, _ = bucket_curves(make_bucket_curves(per_bucket=12))
        reps = build_representatives(buckets, k_per_bucket=10, seed=0)
        assert len(reps) == 60
        assert [r.motion_id for r in reps] == list(range(1, 61))
        for bi, (lo, hi) in enumerate(BUCKET_RANGES):
            chunk = reps[bi * 10 : (bi + 1) * 10]
            assert all(r.bucket == (lo, hi) for r in chunk)
            assert all(lo <= r.medoid.length <= hi for r in chunk)

    def test_underfilled_bucket_raises(self):
        buckets, _, _ = bucket_curves(make_bucket_curves(per_bucket=4))
        with pytest.raises(InvalidK):
            build_representatives(buckets, k_per_bucket=10)

    def test_medoid_assigns_to_itself(self):
        buckets, _, _ = bucket_curves(make_bucket_curves(per_bucket=8))
        reps = build_representatives(buckets, k_per_bucket=3, seed=1)
        for r in reps:
            assert assign_motion(r.medoid, reps) == r.motion_id


class TestAssignMotion:
    def reps_two(self):
        return [
            RepresentativeMotion(motion_id=1, bucket=(11, 20), medoid=static_curve(15)),
            RepresentativeMotion(motion_id=2, bucket=(11, 20), medoid=line_curve(15)),
        ]

    def test_static_prefers_static(self):
        assert assign_motion(static_curve(14), self.reps_two()) == 1

    def test_out_of_bucket(self):
        with pytest.raises(OutOfBucketRange):
            assign_motion(static_curve(10), self.reps_two())

    def test_matches_direct_recomputation(self):
        buckets, _, _ = bucket_curves(make_bucket_curves(per_bucket=8, seed=5))
        reps = build_representatives(buckets, k_per_bucket=5, seed=2)
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(11, 101))
            c = curve(rng.normal(scale=0.01, size=(n, 2)))
            got = assign_motion(c, reps)
            in_bucket = [r for r in reps if r.bucket[0] <= n <= r.bucket[1]]
            dists = [dtw_distance(c, r.medoid) for r in in_bucket]
            assert got == in_bucket[int(np.argmin(dists))].motion_id


class TestHistogram:
    def test_all_one_motion(self):
        reps = [
            RepresentativeMotion(motion_id=1, bucket=(11, 20), medoid=static_curve(15)),
            RepresentativeMotion(motion_id=2, bucket=(11, 20), medoid=line_curve(15)),
        ]
        trajs = [traj_from_centers([(300, 300)] * 15) for _ in range(10)]
        h = motion_histogram(trajs, reps, META)
        assert h.bins[0] == 1.0
        assert h.total == 10

    def test_split_and_normalized(self):
        reps = [
            RepresentativeMotion(motion_id=1, bucket=(11, 20), medoid=static_curve(15)),
            RepresentativeMotion(motion_id=2, bucket=(11, 20), medoid=line_curve(15, step=(0.02, 0))),
        ]
        static_trajs = [traj_from_centers([(300, 300)] * 12) for _ in range(5)]
        moving_trajs = [traj_from_centers([(300 + 38.4 * i, 300) for i in range(12)]) for _ in range(5)]
        h = motion_histogram(static_trajs + moving_trajs, reps, META)
        assert h.bins.tolist() == [0.5, 0.5]
        assert h.bins.sum() == pytest.approx(1.0, abs=1e-9)

    def test_empty_flagged(self):
        reps = [RepresentativeMotion(motion_id=1, bucket=(11, 20), medoid=static_curve(15))]
        h = motion_histogram([traj_from_centers([(1, 1)] * 5)], reps, META)
        assert h.total == 0
        assert np.all(h.bins == 0)


def blob_histograms(n_per_blob=15, sigma=0.002, seed=0, nbins=60):
    rng = np.random.default_rng(seed)
    bases = []
    for peak in (0, 25, 50):
        base = np.full(nbins, 1e-4)
        base[peak] = 1.0
        bases.append(base / base.sum())
    out = []
    for bi, base in enumerate(bases):
        for i in range(n_per_blob):
            noisy = np.clip(base + rng.normal(0, sigma, nbins), 1e-9, None)
            noisy /= noisy.sum()
            out.append(MotionHistogram(video_id=f"b{bi}-{i}", bins=noisy, total=10))
    return out


class TestClusterVideos:
    def test_recovers_three_blobs(self):
        hists = blob_histograms()
        res = cluster_videos(hists, seed=0)
        assert res.k == 3
        labels = res.labels
        for group in (labels[:15], labels[15:30], labels[30:]):
            assert len(set(group.tolist())) == 1

    def test_ch_matches_sklearn(self):
        hists = blob_histograms(seed=3)
        X = np.stack([h.bins for h in hists])
        res = cluster_videos(hists, seed=1)
        for k, score in res.ch_scores.items():
            if not np.isfinite(score):
                continue
            from sklearn.cluster import KMeans

            labels = KMeans(n_clusters=k, n_init=10, random_state=1).fit(X).labels_
            assert score == pytest.approx(calinski_harabasz_score(X, labels), rel=1e-9)

    def test_degenerate_duplicates(self):
        base = np.zeros(60)
        base[7] = 1.0
        hists = [MotionHistogram(video_id=f"v{i}", bins=base.copy(), total=5) for i in range(8)]
        res = cluster_videos(hists, seed=0)
        assert res.degenerate
        assert res.k == 2  # smallest candidate k under the +inf convention

    def test_too_few_videos(self):
        with pytest.raises(TooFewVideos):
            cluster_videos(blob_histograms()[:2])

    def test_deterministic_given_seed(self):
        hists = blob_histograms(seed=6)
        r1 = cluster_videos(hists, seed=5)
        r2 = cluster_videos(hists, seed=5)
        assert r1.k == r2.k
        assert np.array_equal(r1.labels, r2.labels)


class TestMeanHistograms:
    def test_single_member(self):
        h = blob_histograms(n_per_blob=1)[0]
        means = mean_histograms([0], [h])
        assert np.array_equal(means[0], h.bins)

    def test_two_members_average(self):
        a = MotionHistogram(video_id="a", bins=np.eye(60)[0], total=1)
        b = MotionHistogram(video_id="b", bins=np.eye(60)[1], total=1)
        means = mean_histograms([0, 0], [a, b])
        assert means[0][0] == means[0][1] == 0.5

    def test_means_sum_to_one(self):
        hists = blob_histograms(seed=2)
        res = cluster_videos(hists, seed=2)
        for m in mean_histograms(res.labels, hists).values():
            assert m.sum() == pytest.approx(1.0, abs=1e-9)


class TestAnalysisIO:
    def test_representatives_round_trip(self, tmp_path):
        buckets, _, _ = bucket_curves(make_bucket_curves(per_bucket=6))
        reps = build_representatives(buckets, k_per_bucket=4, seed=0)
        path = tmp_path / "representatives.json"
        motion.write_representatives(reps, path)
        loaded = motion.load_representatives(path)
        assert [(r.motion_id, r.bucket) for r in loaded] == [(r.motion_id, r.bucket) for r in reps]
        for a, b in zip(loaded, reps):
            assert np.allclose(a.medoid.points, b.medoid.points)

    def test_histograms_csv_round_trip(self, tmp_path):
        hists = blob_histograms(n_per_blob=2)
        path = tmp_path / "histograms.csv"
        motion.write_histograms_csv(hists, path)
        loaded = motion.load_histograms_csv(path)
        assert [h.video_id for h in loaded] == [h.video_id for h in hists]
        for a, b in zip(loaded, hists):
            assert np.array_equal(a.bins, b.bins)

    def test_clusters_round_trip(self, tmp_path):
        hists = blob_histograms()
        res = cluster_videos(hists, seed=0)
        path = tmp_path / "clusters.json"
        motion.write_clusters(res, [h.video_id for h in hists], path)
        obj = motion.load_clusters(path)
        assert obj["k"] == res.k
        assert len(obj["assignments"]) == len(hists)
