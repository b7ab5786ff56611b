import json
import xml.etree.ElementTree as ET

import pytest

from lyrictrack import cli
from lyrictrack.config import PipelineConfig, load_pipeline_config
from lyrictrack.synth import make_scenario, write_scenario


def run(argv, capsys=None):
    return cli.main(argv)


def make_video_dir(tmp_path, name, seed, frames=500, words=12, noise=None, span_range=(14, 36)):
    """synth + match + track via the CLI; returns the video directory."""
    scen = make_scenario(name, frames=frames, words=words, seed=seed, noise=noise, span_range=span_range)
    tmp_path.mkdir(parents=True, exist_ok=True)
    scen_path = tmp_path / f"{name}.scenario.json"
    write_scenario(scen, scen_path)
    out = tmp_path / name
    assert cli.main(["synth", str(scen_path), "--out", str(out)]) == 0
    assert cli.main([
        "match",
        "--detections", str(out / "detections.jsonl"),
        "--lyrics", str(out / "lyrics.txt"),
        "--meta", str(out / "video.meta.json"),
        "--out", str(out / "anchors.json"),
    ]) == 0
    assert cli.main([
        "track",
        "--anchors", str(out / "anchors.json"),
        "--detections", str(out / "detections.jsonl"),
        "--meta", str(out / "video.meta.json"),
        "--out", str(out / "trajectories.jsonl"),
    ]) == 0
    return out


class TestPipeline:
    def test_match_zero_noise_cost_zero(self, tmp_path, capsys):
        out = make_video_dir(tmp_path, "v00", seed=0)
        anchors = json.loads((out / "anchors.json").read_text())
        assert anchors["total_cost"] == 0
        assert anchors["video"] == "v00"
        assert len(anchors["anchors"]) == 12

    def test_eval_modes(self, tmp_path):
        out = make_video_dir(tmp_path, "v01", seed=1)
        for mode in ("MA", "MA+TR", "MA+TR+IN"):
            code = cli.main([
                "eval",
                "--trajectories", str(out / "trajectories.jsonl"),
                "--gt", str(out / "gt.json"),
                "--meta", str(out / "video.meta.json"),
                "--mode", mode,
                "--out", str(out / f"metrics.{mode}.json"),
            ])
            assert code == 0
        full = json.loads((out / "metrics.MA+TR+IN.json").read_text())
        ma = json.loads((out / "metrics.MA.json").read_text())
        assert full["mode"] == "MA+TR+IN"
        assert full["recall"] >= 99.0
        assert ma["recall"] < full["recall"]
        assert set(full) == {"tp", "fp", "fn", "precision", "recall", "f", "mode"}

    def test_eval_anchors_only_input(self, tmp_path):
        out = make_video_dir(tmp_path, "v02", seed=2)
        code = cli.main([
            "eval",
            "--anchors", str(out / "anchors.json"),
            "--detections", str(out / "detections.jsonl"),
            "--gt", str(out / "gt.json"),
            "--mode", "MA",
            "--out", str(out / "metrics.anchors.json"),
        ])
        assert code == 0
        obj = json.loads((out / "metrics.anchors.json").read_text())
        assert obj["tp"] + obj["fn"] > 0

    def test_eval_counts_fixture(self, tmp_path, capsys):
        path = tmp_path / "metrics.json"
        code = cli.main(["eval", "--counts", "5547", "550", "2223", "--out", str(path)])
        assert code == 0
        obj = json.loads(path.read_text())
        assert (obj["precision"], obj["recall"], obj["f"]) == (90.98, 71.39, 0.8)

    def test_analyze_and_report(self, tmp_path):
        dirs = [
            make_video_dir(tmp_path, f"v{i:02d}", seed=10 + i, frames=2200, words=16, span_range=(12, 95))
            for i in range(5)
        ]
        analysis = tmp_path / "analysis"
        code = cli.main(
            ["analyze", "--videos", *[str(d) for d in dirs], "--out", str(analysis), "--k", "2", "--seed", "0"]
        )
        assert code == 0
        for name in ("representatives.json", "histograms.csv", "clusters.json", "mean_histograms.csv"):
            assert (analysis / name).exists(), name
        reps = json.loads((analysis / "representatives.json").read_text())["representatives"]
        assert len(reps) == 12  # 2 per bucket x 6 buckets
        clusters = json.loads((analysis / "clusters.json").read_text())
        assert len(clusters["assignments"]) == 5

        report_dir = tmp_path / "report"
        assert cli.main(["report", "--analysis", str(analysis), "--out", str(report_dir)]) == 0
        svgs = sorted(report_dir.glob("*.svg"))
        assert len(svgs) >= 2
        for svg in svgs:
            root = ET.parse(svg).getroot()
            assert root.tag.endswith("svg")
        summary = (report_dir / "cluster_summary.csv").read_text().splitlines()
        assert summary[0] == "cluster,videos,top_motion,top_share"
        assert len(summary) == len(set(clusters["assignments"].values())) + 1

    def test_rerun_byte_identical(self, tmp_path):
        out1 = make_video_dir(tmp_path / "a", "same", seed=5)
        out2 = make_video_dir(tmp_path / "b", "same", seed=5)
        for name in ("detections.jsonl", "anchors.json", "trajectories.jsonl", "gt.json", "lyrics.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


class TestExitCodes:
    def test_schema_error_is_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"t": 0, "boxes": [{"poly": [[0,0],[1,0],[1,1]], "text": "A", "conf": 0.5, "det": "x"}]}\n')
        lyrics = tmp_path / "lyrics.txt"
        lyrics.write_text("hello\n")
        meta = tmp_path / "meta.json"
        meta.write_text('{"id":"v","fps":24,"width":100,"height":100,"frames":5}')
        code = cli.main([
            "match", "--detections", str(bad), "--lyrics", str(lyrics),
            "--meta", str(meta), "--out", str(tmp_path / "a.json"),
        ])
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "SchemaError"
        assert err["line"] == 1

    def test_infeasible_is_3(self, tmp_path, capsys):
        det = tmp_path / "d.jsonl"
        det.write_text('{"t":0,"boxes":[]}\n')
        lyrics = tmp_path / "lyrics.txt"
        lyrics.write_text("one two three\n")
        meta = tmp_path / "meta.json"
        meta.write_text('{"id":"v","fps":24,"width":100,"height":100,"frames":1}')
        code = cli.main([
            "match", "--detections", str(det), "--lyrics", str(lyrics),
            "--meta", str(meta), "--out", str(tmp_path / "a.json"),
        ])
        assert code == 3
        assert json.loads(capsys.readouterr().err)["error"] == "InfeasiblePath"

    def test_too_few_videos_is_4(self, tmp_path, capsys):
        d = make_video_dir(tmp_path, "v0", seed=3)
        code = cli.main(["analyze", "--videos", str(d), "--out", str(tmp_path / "x"), "--k", "1"])
        assert code == 4
        assert json.loads(capsys.readouterr().err)["error"] == "TooFewVideos"

    def test_generic_error_is_1(self, tmp_path, capsys):
        code = cli.main(["eval", "--out", str(tmp_path / "m.json")])
        assert code == 1


class TestConfig:
    def test_defaults(self):
        cfg = load_pipeline_config()
        assert cfg == PipelineConfig()

    def test_file_and_overrides(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text(
            "[match]\ndelta = 500\n[track]\nword_sim = 0.25\nmax_miss = 6\n[run]\nseed = 3\n"
        )
        cfg = load_pipeline_config(cfg_path, delta=250, max_miss=None)
        assert cfg.delta == 250  # flag wins
        assert cfg.track.word_sim == 0.25
        assert cfg.track.max_miss == 6
        assert cfg.seed == 3

    def test_unknown_key_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text("[match]\ndeltta = 5\n")
        with pytest.raises(ValueError):
            load_pipeline_config(cfg_path)

    def test_unknown_section_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text("[nope]\nx = 1\n")
        with pytest.raises(ValueError):
            load_pipeline_config(cfg_path)

    def test_validation(self):
        with pytest.raises(ValueError):
            load_pipeline_config(delta=0)
        with pytest.raises(ValueError):
            load_pipeline_config(word_sim=2.0)

    def test_config_flag_in_match(self, tmp_path):
        cfg_path = tmp_path / "cfg.toml"
        cfg_path.write_text("[match]\ndelta = 40\n")
        out = tmp_path / "v"
        scen = make_scenario("v", frames=500, words=12, seed=0)
        scen_path = tmp_path / "s.json"
        write_scenario(scen, scen_path)
        assert cli.main(["synth", str(scen_path), "--out", str(out)]) == 0
        code = cli.main([
            "match", "--detections", str(out / "detections.jsonl"),
            "--lyrics", str(out / "lyrics.txt"), "--meta", str(out / "video.meta.json"),
            "--out", str(out / "anchors.json"), "--config", str(cfg_path),
        ])
        assert code == 0
        assert json.loads((out / "anchors.json").read_text())["delta"] == 40
