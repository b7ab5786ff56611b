"""Video-to-detections front end for the lyric tracking pipeline."""

from .adapter import AdapterConfig, ModelLoadError, VideoDecodeError, run_adapter
from .clip import ClipScript, WordScript, make_test_clip
from .detect import DETECTORS
from .recognize import RECOGNIZERS

__version__ = "0.1.0"
