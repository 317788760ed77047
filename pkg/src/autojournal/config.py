"""Declarative run configuration: one YAML file drives every subcommand.

String values may interpolate environment variables as ``${NAME}``; a
missing variable is a configuration error. Relative paths resolve against
the config file's own directory so fixture sets stay relocatable.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .chunking import DEFAULT_MAX_BYTES, DEFAULT_MAX_IMAGES
from .errors import ConfigError
from .evaluation import DEFAULT_STUB_DIM
from .gateway import (
    DEFAULT_BACKOFF_S,
    DEFAULT_IMAGE_TIMEOUT_S,
    DEFAULT_RETRIES,
    DEFAULT_VIDEO_TIMEOUT_S,
)
from .ingest import DEFAULT_DEDUP_THRESHOLD, DEFAULT_INTERVAL_S, DEFAULT_TIMESTAMP_PATTERN
from .journal import GENERATED_STREAMS
from .video import DEFAULT_FPS

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class DataConfig:
    screenshots_dir: Path
    ground_truth_dir: Path


@dataclass(frozen=True)
class IngestConfig:
    timestamp_pattern: str = DEFAULT_TIMESTAMP_PATTERN
    dedup_threshold: float = DEFAULT_DEDUP_THRESHOLD
    interval_s: float = DEFAULT_INTERVAL_S
    dimension_tolerance: int = 0


@dataclass(frozen=True)
class ChunkConfig:
    max_images: int = DEFAULT_MAX_IMAGES
    max_bytes: int = DEFAULT_MAX_BYTES


@dataclass(frozen=True)
class VideoConfig:
    fps: float = DEFAULT_FPS
    encoder_path: str | None = None  # None: ffmpeg on PATH, else built-in writer
    lossless: bool = True
    resolution: tuple[int, int] | None = None
    timestamp_overlay: bool = False
    container_ext: str = "avi"  # lossless FFV1 lives in avi containers


@dataclass(frozen=True)
class ModelConfig:
    provider: str = "mock"  # mock | http
    endpoint: str | None = None
    script_dir: Path | None = None
    parallelism: int = 2
    rpm: float | None = None
    temperature: float = 0.0
    top_p: float = 1.0
    retries: int = DEFAULT_RETRIES
    backoff_s: float = DEFAULT_BACKOFF_S
    image_timeout_s: float = DEFAULT_IMAGE_TIMEOUT_S
    video_timeout_s: float = DEFAULT_VIDEO_TIMEOUT_S
    max_payload_bytes: int | None = None


@dataclass(frozen=True)
class EvalConfig:
    provider: str = "stub"  # stub | http
    endpoint: str | None = None
    stub_dim: int = DEFAULT_STUB_DIM


@dataclass(frozen=True)
class RunConfig:
    participants: tuple[str, ...]
    dates: tuple[str, ...]
    streams: tuple[str, ...]
    out_dir: Path
    data: DataConfig
    ingest: IngestConfig = field(default_factory=IngestConfig)
    chunk: ChunkConfig = field(default_factory=ChunkConfig)
    video: VideoConfig = field(default_factory=VideoConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    max_workers: int = 2

    def journal_path(self, participant: str, date: str, stream: str) -> Path:
        return self.out_dir / "journals" / participant / f"{date}.{stream}.json"

    def ground_truth_path(self, participant: str, date: str) -> Path:
        return self.data.ground_truth_dir / participant / f"{date}.json"

    def screenshots_path(self, participant: str, date: str) -> Path:
        return self.data.screenshots_dir / participant / date

    def video_path(self, participant: str, date: str) -> Path:
        return self.out_dir / "video" / participant / f"{date}.{self.video.container_ext}"

    def intermediate_dir(self, participant: str, date: str) -> Path:
        return self.out_dir / "intermediate" / participant / date


def _interpolate(value: object) -> object:
    if isinstance(value, str):
        def repl(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable {name} is not set")
            return os.environ[name]

        return _ENV_RE.sub(repl, value)
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    return value


def _section(raw: dict, name: str) -> dict:
    section = raw.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return section


def _require_list(raw: dict, key: str) -> list:
    value = raw.get(key)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key!r} must be a non-empty list")
    return value


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = _interpolate(raw)
    base = path.parent

    def respath(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (base / p)

    participants = tuple(str(p) for p in _require_list(raw, "participants"))
    dates = tuple(str(d) for d in _require_list(raw, "dates"))
    for date in dates:
        if not _DATE_RE.match(date):
            raise ConfigError(f"date {date!r} is not in YYYY-MM-DD form")
    streams = tuple(str(s) for s in _require_list(raw, "streams"))
    for stream in streams:
        if stream not in GENERATED_STREAMS:
            raise ConfigError(f"stream {stream!r} must be one of {GENERATED_STREAMS}")

    data_raw = _section(raw, "data")
    for key in ("screenshots_dir", "ground_truth_dir"):
        if key not in data_raw:
            raise ConfigError(f"data.{key} is required")
    data = DataConfig(
        screenshots_dir=respath(data_raw["screenshots_dir"]),
        ground_truth_dir=respath(data_raw["ground_truth_dir"]),
    )

    ingest_raw = _section(raw, "ingest")
    chunk_raw = _section(raw, "chunk")
    video_raw = _section(raw, "video")
    model_raw = _section(raw, "model")
    eval_raw = _section(raw, "eval")

    try:
        resolution = video_raw.get("resolution")
        config = RunConfig(
            participants=participants,
            dates=dates,
            streams=streams,
            out_dir=respath(str(raw.get("out_dir", "out"))),
            data=data,
            ingest=IngestConfig(
                timestamp_pattern=str(
                    ingest_raw.get("timestamp_pattern", DEFAULT_TIMESTAMP_PATTERN)
                ),
                dedup_threshold=float(
                    ingest_raw.get("dedup_threshold", DEFAULT_DEDUP_THRESHOLD)
                ),
                interval_s=float(ingest_raw.get("interval_s", DEFAULT_INTERVAL_S)),
                dimension_tolerance=int(ingest_raw.get("dimension_tolerance", 0)),
            ),
            chunk=ChunkConfig(
                max_images=int(chunk_raw.get("max_images", DEFAULT_MAX_IMAGES)),
                max_bytes=int(chunk_raw.get("max_bytes", DEFAULT_MAX_BYTES)),
            ),
            video=VideoConfig(
                fps=float(video_raw.get("fps", DEFAULT_FPS)),
                encoder_path=video_raw.get("encoder_path"),
                lossless=bool(video_raw.get("lossless", True)),
                resolution=(int(resolution[0]), int(resolution[1])) if resolution else None,
                timestamp_overlay=bool(video_raw.get("timestamp_overlay", False)),
                container_ext=str(video_raw.get("container_ext", "avi")),
            ),
            model=ModelConfig(
                provider=str(model_raw.get("provider", "mock")),
                endpoint=model_raw.get("endpoint"),
                script_dir=respath(model_raw["script_dir"]) if model_raw.get("script_dir") else None,
                parallelism=int(model_raw.get("parallelism", 2)),
                rpm=float(model_raw["rpm"]) if model_raw.get("rpm") else None,
                temperature=float(model_raw.get("temperature", 0.0)),
                top_p=float(model_raw.get("top_p", 1.0)),
                retries=int(model_raw.get("retries", DEFAULT_RETRIES)),
                backoff_s=float(model_raw.get("backoff_s", DEFAULT_BACKOFF_S)),
                image_timeout_s=float(model_raw.get("image_timeout_s", DEFAULT_IMAGE_TIMEOUT_S)),
                video_timeout_s=float(model_raw.get("video_timeout_s", DEFAULT_VIDEO_TIMEOUT_S)),
                max_payload_bytes=(
                    int(model_raw["max_payload_bytes"])
                    if model_raw.get("max_payload_bytes")
                    else None
                ),
            ),
            eval=EvalConfig(
                provider=str(eval_raw.get("provider", "stub")),
                endpoint=eval_raw.get("endpoint") or os.environ.get("EMBED_ENDPOINT"),
                stub_dim=int(eval_raw.get("stub_dim", DEFAULT_STUB_DIM)),
            ),
            max_workers=int(raw.get("max_workers", 2)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc

    if config.model.provider not in ("mock", "http"):
        raise ConfigError(f"model.provider must be mock or http, got {config.model.provider!r}")
    if config.model.provider == "mock" and config.model.script_dir is None:
        raise ConfigError("model.script_dir is required for the mock provider")
    if config.model.provider == "http" and not config.model.endpoint:
        raise ConfigError("model.endpoint is required for the http provider")
    if config.eval.provider not in ("stub", "http"):
        raise ConfigError(f"eval.provider must be stub or http, got {config.eval.provider!r}")
    if config.eval.provider == "http" and not config.eval.endpoint:
        raise ConfigError("eval.endpoint (or EMBED_ENDPOINT) is required for the http provider")
    if config.max_workers < 1:
        raise ConfigError("max_workers must be >= 1")
    return config
