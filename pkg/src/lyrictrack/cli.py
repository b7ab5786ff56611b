"""Command-line pipeline: synth / match / track / eval / analyze / report.

Every command is deterministic given identical inputs and seeds. Errors
leave a machine-readable JSON object on stderr; schema violations exit
with 2, infeasible matching with 3, too few videos for clustering with 4,
anything else with 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import align, corpus, evaluation, motion, report, synth, track
from .config import PipelineConfig, load_pipeline_config

log = logging.getLogger("lyrictrack")

EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_TOO_FEW_VIDEOS = 4


def _setup_logging() -> None:
    level = os.environ.get("LYRICTRACK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(name)s %(levelname)s %(message)s")


def _config_from_args(args) -> PipelineConfig:
    return load_pipeline_config(
        getattr(args, "config", None),
        delta=getattr(args, "delta", None),
        dedup_threshold=getattr(args, "dedup_threshold", None),
        word_sim=getattr(args, "word_sim", None),
        max_move=getattr(args, "max_move", None),
        min_scale=getattr(args, "min_scale", None),
        max_miss=getattr(args, "max_miss", None),
        k_per_bucket=getattr(args, "k", None),
        k_min=getattr(args, "k_min", None),
        k_max=getattr(args, "k_max", None),
        seed=getattr(args, "seed", None),
    )


def _load_deduped_detections(path: str, threshold: float) -> list[corpus.FrameDetections]:
    frames = corpus.load_detections(path)
    return [corpus.dedup_detections(f, threshold) for f in frames]


def cmd_synth(args) -> int:
    scenario = synth.load_scenario(args.scenario)
    if args.seed is not None:
        scenario = synth.Scenario(
            meta=scenario.meta,
            scripts=scenario.scripts,
            noise=synth.NoiseModel(
                p_dropout=scenario.noise.p_dropout,
                p_char_sub=scenario.noise.p_char_sub,
                p_spurious=scenario.noise.p_spurious,
                jitter_sigma=scenario.noise.jitter_sigma,
                seed=args.seed,
            ),
            allow_overlap=scenario.allow_overlap,
            gt_stride=scenario.gt_stride,
        )
    video = synth.generate(
        scenario.scripts, scenario.meta, scenario.noise,
        allow_overlap=scenario.allow_overlap, gt_stride=scenario.gt_stride,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus.write_detections(video.frames, out / "detections.jsonl")
    corpus.write_video_meta(video.meta, out / "video.meta.json")
    corpus.write_ground_truth(video.gt_frames, out / "gt.json")
    (out / "lyrics.txt").write_text(video.lyrics_text + "\n", encoding="utf-8")
    track.write_trajectories(video.gt_trajectories, out / "gt_trajectories.jsonl")
    stats = synth.corpus_stats(video.frames)
    print(
        f"wrote {out}: {stats.n_frames} frames, {stats.n_boxes} boxes "
        f"({stats.boxes_per_frame:.2f}/frame), {len(video.gt_trajectories)} words"
    )
    return 0


def cmd_match(args) -> int:
    cfg = _config_from_args(args)
    lyrics = corpus.load_lyrics(args.lyrics)
    meta = corpus.load_video_meta(args.meta)
    frames = _load_deduped_detections(args.detections, cfg.dedup_threshold)
    result = align.lyric_frame_match(lyrics, frames, delta=cfg.delta)
    align.write_anchors(result, meta.id, cfg.delta, args.out)
    print(f"matched {lyrics.K} words, total cost {result.total_cost}")
    return 0


def cmd_track(args) -> int:
    cfg = _config_from_args(args)
    meta = corpus.load_video_meta(args.meta)
    frames = _load_deduped_detections(args.detections, cfg.dedup_threshold)
    _, _, result = align.load_anchors(args.anchors)
    result = track.resolve_anchor_boxes(result, frames)
    trajectories = track.track_all(result, frames, meta, cfg.track)
    track.write_trajectories(trajectories, args.out)
    n_frames = sum(len(t.frames) for t in trajectories)
    print(f"tracked {len(trajectories)} words over {n_frames} trajectory frames")
    return 0


def cmd_eval(args) -> int:
    if args.counts is not None:
        tp, fp, fn = args.counts
        rep = evaluation.metrics(tp, fp, fn)
    else:
        if args.trajectories:
            trajectories = track.load_trajectories(args.trajectories)
        elif args.anchors and args.detections:
            cfg = _config_from_args(args)
            frames = _load_deduped_detections(args.detections, cfg.dedup_threshold)
            _, _, result = align.load_anchors(args.anchors)
            result = track.resolve_anchor_boxes(result, frames)
            trajectories = [
                track.Trajectory(
                    k=a.k, word=a.word, anchor_t=a.t,
                    frames=(track.TrackedFrame(t=a.t, quad=a.box.quad, source=track.TrackSource.DETECTED),),
                )
                for a in result.anchors
                if a.box is not None
            ]
        else:
            raise ValueError("eval needs --trajectories, or --anchors with --detections, or --counts")
        gt = corpus.load_ground_truth(args.gt)
        frame_count = corpus.load_video_meta(args.meta).frames if args.meta else None
        rep = evaluation.evaluate_video(trajectories, gt, mode=args.mode, frame_count=frame_count)
    evaluation.write_metrics(rep, args.mode, args.out)
    p, r, f = rep.rounded()
    print(f"{args.mode}: TP={rep.tp} FP={rep.fp} FN={rep.fn} P={p:.2f} R={r:.2f} F={f:.4f}")
    return 0


def cmd_analyze(args) -> int:
    cfg = _config_from_args(args)
    if len(args.videos) < 3:
        raise motion.TooFewVideos(f"need at least 3 videos, got {len(args.videos)}")
    curves_per_video = []
    metas = []
    trajs_per_video = []
    for d in args.videos:
        d = Path(d)
        meta = corpus.load_video_meta(d / "video.meta.json")
        trajectories = track.load_trajectories(d / args.trajectories_name)
        metas.append(meta)
        trajs_per_video.append(trajectories)
        curves_per_video.append([motion.to_motion_curve(t, meta) for t in trajectories])

    all_curves = [c for curves in curves_per_video for c in curves]
    buckets, short, long_ = motion.bucket_curves(all_curves)
    log.info("bucketed %d curves (%d short, %d long excluded)", len(all_curves) - short - long_, short, long_)
    reps = motion.build_representatives(buckets, k_per_bucket=cfg.k_per_bucket, seed=cfg.seed)
    histograms = [
        motion.motion_histogram(trajs, reps, meta)
        for trajs, meta in zip(trajs_per_video, metas)
    ]
    clusters = motion.cluster_videos(histograms, k_range=range(cfg.k_min, cfg.k_max + 1), seed=cfg.seed)
    means = motion.mean_histograms(clusters.labels, histograms)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    motion.write_representatives(reps, out / "representatives.json")
    motion.write_histograms_csv(histograms, out / "histograms.csv")
    motion.write_clusters(clusters, [m.id for m in metas], out / "clusters.json")
    motion.write_mean_histograms_csv(means, out / "mean_histograms.csv")
    print(f"analyzed {len(metas)} videos: {len(reps)} representatives, chose k={clusters.k}")
    return 0


def cmd_report(args) -> int:
    written = report.render_report(args.analysis, args.out)
    print(f"wrote {len(written)} report files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyrictrack",
        description="Align lyrics to per-frame text detections, track word motion, evaluate, and cluster.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic detection corpus from a scenario file")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario noise seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("match", help="compute the optimal word-to-frame assignment")
    p.add_argument("--detections", required=True)
    p.add_argument("--lyrics", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True, help="anchors.json path")
    p.add_argument("--delta", type=int, default=None, help="max frame gap between consecutive anchors")
    p.add_argument("--dedup-threshold", dest="dedup_threshold", type=float, default=None)
    p.add_argument("--config", default=None, help="TOML config file")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("track", help="extend anchors into per-frame trajectories")
    p.add_argument("--anchors", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True, help="trajectories.jsonl path")
    p.add_argument("--word-sim", dest="word_sim", type=float, default=None)
    p.add_argument("--max-move", dest="max_move", type=float, default=None)
    p.add_argument("--min-scale", dest="min_scale", type=float, default=None)
    p.add_argument("--max-miss", dest="max_miss", type=int, default=None)
    p.add_argument("--dedup-threshold", dest="dedup_threshold", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score trajectories or anchors against ground truth")
    p.add_argument("--trajectories", default=None)
    p.add_argument("--anchors", default=None)
    p.add_argument("--detections", default=None)
    p.add_argument("--gt", default=None)
    p.add_argument("--meta", default=None)
    p.add_argument("--mode", choices=sorted(evaluation.MODES), default="MA+TR+IN")
    p.add_argument("--counts", nargs=3, type=int, metavar=("TP", "FP", "FN"), default=None,
                   help="skip matching and compute metrics from raw counts")
    p.add_argument("--dedup-threshold", dest="dedup_threshold", type=float, default=None)
    p.add_argument("--out", required=True, help="metrics.json path")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="cluster word motions across videos")
    p.add_argument("--videos", nargs="+", required=True,
                   help="per-video directories holding trajectories.jsonl + video.meta.json")
    p.add_argument("--out", required=True, help="analysis output directory")
    p.add_argument("--k", type=int, default=None, help="representatives per length bucket")
    p.add_argument("--k-min", dest="k_min", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trajectories-name", default="trajectories.jsonl")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render analysis outputs as SVG charts and CSV tables")
    p.add_argument("--analysis", required=True, help="directory written by analyze")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def _error_payload(exc: BaseException) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    line = getattr(exc, "line", None)
    if line is not None:
        payload["line"] = line
    return json.dumps(payload)


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except corpus.SchemaError as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_SCHEMA
    except align.InfeasiblePath as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    except motion.TooFewVideos as exc:
        print(_error_payload(exc), file=sys.stderr)
        return EXIT_TOO_FEW_VIDEOS
    except (ValueError, OSError) as exc:
        print(_error_payload(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
