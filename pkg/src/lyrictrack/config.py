"""Pipeline configuration: TOML file with command-line flag overrides.

Sections and keys:

    [match]   delta, dedup_threshold
    [track]   word_sim, max_move, min_scale, max_miss
    [motion]  k_per_bucket, k_min, k_max
    [run]     seed

Flags always win over the file; unknown keys are rejected to catch typos.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .track import TrackParams


@dataclass(frozen=True)
class PipelineConfig:
    delta: int = 1000
    dedup_threshold: float = 0.5
    track: TrackParams = field(default_factory=TrackParams)
    k_per_bucket: int = 10
    k_min: int = 2
    k_max: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if not 0.0 < self.dedup_threshold <= 1.0:
            raise ValueError("dedup_threshold must be in (0,1]")
        if self.k_per_bucket < 1:
            raise ValueError("k_per_bucket must be >= 1")
        if not 2 <= self.k_min <= self.k_max:
            raise ValueError("need 2 <= k_min <= k_max")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


_SCHEMA = {
    "match": {"delta", "dedup_threshold"},
    "track": {"word_sim", "max_move", "min_scale", "max_miss"},
    "motion": {"k_per_bucket", "k_min", "k_max"},
    "run": {"seed"},
}


def load_pipeline_config(path: Optional[Union[str, Path]] = None, **overrides) -> PipelineConfig:
    """Build a PipelineConfig from an optional TOML file plus overrides.

    Override kwargs use the flat names: delta, dedup_threshold, word_sim,
    max_move, min_scale, max_miss, k_per_bucket, k_min, k_max, seed.
    Overrides with value None are ignored.
    """
    values: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for section, keys in data.items():
            if section not in _SCHEMA:
                raise ValueError(f"unknown config section [{section}]")
            if not isinstance(keys, dict):
                raise ValueError(f"config section [{section}] must be a table")
            for key, val in keys.items():
                if key not in _SCHEMA[section]:
                    raise ValueError(f"unknown config key {key!r} in [{section}]")
                values[key] = val
    for key, val in overrides.items():
        if val is not None:
            values[key] = val

    track_kwargs = {k: values.pop(k) for k in ("word_sim", "max_move", "min_scale", "max_miss") if k in values}
    track = TrackParams(**track_kwargs)
    return PipelineConfig(track=track, **values)
