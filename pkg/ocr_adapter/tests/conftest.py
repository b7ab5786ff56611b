import pytest

from ocr_adapter import AdapterConfig, make_test_clip, run_adapter


@pytest.fixture(scope="session")
def clip(tmp_path_factory):
    path = tmp_path_factory.mktemp("clip") / "test_clip.mp4"
    return make_test_clip(path, seconds=5.0, fps=12.0, seed=0)


@pytest.fixture(scope="session")
def adapter_out(clip, tmp_path_factory):
    out = tmp_path_factory.mktemp("adapter")
    detections, meta = run_adapter(AdapterConfig(video=clip.path), out)
    return {"detections": detections, "meta": meta, "dir": out}
