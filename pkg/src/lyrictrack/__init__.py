"""Lyric-video text analysis: matching, tracking, evaluation, motion clustering."""

from .align import (
    Anchor,
    DistanceRow,
    InfeasiblePath,
    MatchResult,
    edit_distance,
    frame_word_distance,
    lyric_frame_match,
    match_cost_matrix,
    match_from_costs,
)
from .corpus import (
    Detection,
    EmptyLyrics,
    FrameDetections,
    GTBox,
    GTFrame,
    LyricSequence,
    LyricWord,
    NonMonotoneFrames,
    Quad,
    SchemaError,
    VideoMeta,
    dedup_detections,
    normalize_word,
    parse_detections,
    tokenize_lyrics,
)
from .evaluation import EvalReport, MissingGT, evaluate_video, match_frame, metrics
from .motion import (
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
from .synth import MotionScript, NoiseModel, ScriptOverlapError, corpus_stats, generate, make_scenario
from .track import TrackParams, TrackSource, TrackedFrame, Trajectory, extend_track, interpolate_gaps, track_all

__version__ = "0.1.0"
