import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from ocr_adapter import (
    DETECTORS,
    RECOGNIZERS,
    AdapterConfig,
    ModelLoadError,
    VideoDecodeError,
    run_adapter,
)
from ocr_adapter.cli import main as cli_main

FRAME_SCHEMA = {
    "type": "object",
    "required": ["t", "boxes"],
    "additionalProperties": False,
    "properties": {
        "t": {"type": "integer", "minimum": 0},
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["poly", "text", "conf", "det"],
                "additionalProperties": False,
                "properties": {
                    "poly": {
                        "type": "array",
                        "minItems": 4,
                        "maxItems": 4,
                        "items": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"type": "number"},
                        },
                    },
                    "text": {"type": "string"},
                    "conf": {"type": "number", "minimum": 0, "maximum": 1},
                    "det": {"type": "string", "minLength": 1},
                },
            },
        },
    },
}

META_SCHEMA = {
    "type": "object",
    "required": ["id", "fps", "width", "height", "frames"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string"},
        "fps": {"type": "number", "exclusiveMinimum": 0},
        "width": {"type": "integer", "exclusiveMinimum": 0},
        "height": {"type": "integer", "exclusiveMinimum": 0},
        "frames": {"type": "integer", "minimum": 1},
    },
}


def read_frames(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


class TestAcceptanceCriterion12:
    """Adapter output is schema-valid and the primary pipeline consumes it."""

    def test_outputs_schema_valid(self, adapter_out):
        frames = read_frames(adapter_out["detections"])
        assert frames
        for rec in frames:
            jsonschema.validate(rec, FRAME_SCHEMA)
        meta = json.loads(adapter_out["meta"].read_text())
        jsonschema.validate(meta, META_SCHEMA)
        assert meta["frames"] == 60  # 5 s at 12 fps

    def test_t_strictly_increasing_four_vertex_polys(self, adapter_out):
        frames = read_frames(adapter_out["detections"])
        ts = [rec["t"] for rec in frames]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert ts == list(range(60))
        n_boxes = 0
        for rec in frames:
            for box in rec["boxes"]:
                assert len(box["poly"]) == 4
                n_boxes += 1
        assert n_boxes > 0

    def test_primary_pipeline_consumes_output(self, clip, adapter_out, tmp_path):
        lyrictrack = shutil.which("lyrictrack")
        assert lyrictrack, "primary CLI must be installed"
        lyrics = tmp_path / "lyrics.txt"
        lyrics.write_text(clip.lyrics_text + "\n", encoding="utf-8")
        anchors = tmp_path / "anchors.json"
        result = subprocess.run(
            [
                lyrictrack, "match",
                "--detections", str(adapter_out["detections"]),
                "--lyrics", str(lyrics),
                "--meta", str(adapter_out["meta"]),
                "--out", str(anchors),
            ],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        obj = json.loads(anchors.read_text())
        assert len(obj["anchors"]) == len(clip.lyrics_text.split())

        trajectories = tmp_path / "trajectories.jsonl"
        result = subprocess.run(
            [
                lyrictrack, "track",
                "--anchors", str(anchors),
                "--detections", str(adapter_out["detections"]),
                "--meta", str(adapter_out["meta"]),
                "--out", str(trajectories),
            ],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        assert trajectories.read_text().strip()


class TestAdapterBehavior:
    def test_stride_keeps_original_frame_numbers(self, clip, tmp_path):
        detections, meta = run_adapter(AdapterConfig(video=clip.path, stride=2), tmp_path)
        ts = [rec["t"] for rec in read_frames(detections)]
        assert ts == list(range(0, 60, 2))
        assert json.loads(meta.read_text())["frames"] == 60

    def test_confidence_floor_filters(self, clip, tmp_path):
        loose, _ = run_adapter(AdapterConfig(video=clip.path), tmp_path / "a")
        strict, _ = run_adapter(AdapterConfig(video=clip.path, conf_floor=0.995), tmp_path / "b")
        n_loose = sum(len(r["boxes"]) for r in read_frames(loose))
        n_strict = sum(len(r["boxes"]) for r in read_frames(strict))
        assert n_strict < n_loose
        for rec in read_frames(strict):
            assert all(b["conf"] >= 0.995 for b in rec["boxes"])

    def test_multi_detector_merge_records_ids(self, clip, tmp_path):
        detections, _ = run_adapter(
            AdapterConfig(video=clip.path, detectors=("otsu-contour", "adaptive-contour")), tmp_path
        )
        ids = {b["det"] for r in read_frames(detections) for b in r["boxes"]}
        assert ids == {"otsu-contour", "adaptive-contour"}

    def test_recognition_mostly_exact_on_clean_clip(self, clip, adapter_out):
        rendered = {w.word for w in clip.words}
        texts = [b["text"] for r in read_frames(adapter_out["detections"]) for b in r["boxes"]]
        assert texts
        exact = sum(1 for t in texts if t in rendered)
        assert exact / len(texts) >= 0.8, f"{exact}/{len(texts)} exact"

    def test_unknown_detector(self, clip, tmp_path):
        with pytest.raises(ModelLoadError):
            run_adapter(AdapterConfig(video=clip.path, detectors=("nope",)), tmp_path)

    def test_unknown_recognizer(self, clip, tmp_path):
        with pytest.raises(ModelLoadError):
            run_adapter(AdapterConfig(video=clip.path, recognizer="nope"), tmp_path)

    def test_missing_video(self, tmp_path):
        with pytest.raises(VideoDecodeError):
            run_adapter(AdapterConfig(video=tmp_path / "absent.mp4"), tmp_path)

    def test_stride_validation(self, clip):
        with pytest.raises(ValueError):
            AdapterConfig(video=clip.path, stride=0)

    def test_registries_expose_defaults(self):
        assert "otsu-contour" in DETECTORS
        assert "template" in RECOGNIZERS


class TestCli:
    def test_cli_end_to_end(self, clip, tmp_path, capsys):
        code = cli_main(["--video", str(clip.path), "--stride", "1", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "detections.jsonl").exists()
        assert (tmp_path / "video.meta.json").exists()

    def test_cli_error_payload(self, tmp_path, capsys):
        code = cli_main(["--video", str(tmp_path / "missing.mp4"), "--out", str(tmp_path)])
        assert code == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "VideoDecodeError"
