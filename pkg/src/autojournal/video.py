"""Assemble a day's screenshots into one video at a fixed frame rate.

Every screenshot becomes exactly one video frame shown for 1/fps seconds,
whatever the real capture gaps were; on-screen clocks, not the progress
bar, carry the timing information. Mixed resolutions are letterboxed, never
stretched, so on-screen text stays readable.

Encoding sits behind a narrow interface (ordered frame files + fps in,
container file out). The default spawns an external ffmpeg binary when one
is configured or on PATH and otherwise falls back to the in-process OpenCV
writer, which this artifact also uses for read-back verification.
"""

from __future__ import annotations

import logging
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Protocol, Sequence

import cv2
import numpy as np
from PIL import Image, ImageDraw

from .errors import EmptyStream, EncoderUnavailable, WriteFailed
from .ingest import Screenshot, ScreenshotStream

logger = logging.getLogger(__name__)

DEFAULT_FPS = 30.0


@dataclass(frozen=True)
class VideoSpec:
    fps: float = DEFAULT_FPS
    resolution: tuple[int, int] | None = None  # None: modal input resolution
    timestamp_overlay: bool = False

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.resolution is not None and min(self.resolution) <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")


@dataclass(frozen=True)
class VideoArtifact:
    path: Path
    frame_count: int
    duration_s: float
    covered_range: tuple[int, int]  # first/last capture_time, epoch ms


class VideoEncoder(Protocol):
    def encode(
        self, frame_paths: Sequence[Path], fps: float, out: Path, *, lossless: bool
    ) -> None: ...


class FfmpegEncoder:
    """Spawns an external ffmpeg process over a directory of ordered PNG frames."""

    def __init__(self, binary: str = "ffmpeg"):
        self.binary = binary

    def encode(
        self, frame_paths: Sequence[Path], fps: float, out: Path, *, lossless: bool
    ) -> None:
        if shutil.which(self.binary) is None:
            raise EncoderUnavailable(f"encoder binary not found: {self.binary}")
        pattern = str(frame_paths[0].parent / "%06d.png")
        codec = ["-c:v", "ffv1"] if lossless else ["-c:v", "mpeg4", "-q:v", "2"]
        cmd = [
            self.binary, "-y", "-framerate", str(fps), "-i", pattern,
            *codec, "-r", str(fps), str(out),
        ]
        result = subprocess.run(cmd, capture_output=True, text=True)
        if result.returncode != 0:
            raise WriteFailed(str(out), result.stderr.strip()[-500:])


class OpenCvEncoder:
    """In-process writer: FFV1 for lossless round-trips, mp4v otherwise."""

    def encode(
        self, frame_paths: Sequence[Path], fps: float, out: Path, *, lossless: bool
    ) -> None:
        fourcc = cv2.VideoWriter_fourcc(*("FFV1" if lossless else "mp4v"))
        first = cv2.imread(str(frame_paths[0]))
        if first is None:
            raise WriteFailed(str(out), f"cannot read frame {frame_paths[0]}")
        height, width = first.shape[:2]
        writer = cv2.VideoWriter(str(out), fourcc, fps, (width, height))
        if not writer.isOpened():
            raise EncoderUnavailable(
                f"video writer rejected codec {'FFV1' if lossless else 'mp4v'} for {out}"
            )
        try:
            writer.write(first)
            for path in frame_paths[1:]:
                frame = cv2.imread(str(path))
                if frame is None:
                    raise WriteFailed(str(out), f"cannot read frame {path}")
                writer.write(frame)
        finally:
            writer.release()


def default_encoder(encoder_path: str | None = None) -> VideoEncoder:
    if encoder_path:
        return FfmpegEncoder(encoder_path)
    if shutil.which("ffmpeg"):
        return FfmpegEncoder()
    return OpenCvEncoder()


def letterbox(raster: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Fit an RGB raster into target (width, height), padding with black."""
    target_w, target_h = target
    h, w = raster.shape[:2]
    if (w, h) == (target_w, target_h):
        return raster
    scale = min(target_w / w, target_h / h)
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    resized = np.asarray(
        Image.fromarray(raster).resize((new_w, new_h), Image.Resampling.LANCZOS)
    )
    canvas = np.zeros((target_h, target_w, 3), dtype=np.uint8)
    top = (target_h - new_h) // 2
    left = (target_w - new_w) // 2
    canvas[top : top + new_h, left : left + new_w] = resized
    return canvas


def _overlay_timestamp(raster: np.ndarray, epoch_ms: int) -> np.ndarray:
    stamp = datetime.fromtimestamp(epoch_ms / 1000.0, tz=timezone.utc).strftime(
        "%Y-%m-%d %H:%M:%S"
    )
    img = Image.fromarray(raster.copy())
    draw = ImageDraw.Draw(img)
    draw.rectangle((0, 0, 8 + 6 * len(stamp), 14), fill=(0, 0, 0))
    draw.text((4, 2), stamp, fill=(255, 255, 255))
    return np.asarray(img)


def _modal_resolution(frames: Sequence[Screenshot]) -> tuple[int, int]:
    from collections import Counter

    return Counter((f.width, f.height) for f in frames).most_common(1)[0][0]


def prepared_frames(stream: ScreenshotStream, spec: VideoSpec) -> list[np.ndarray]:
    """The exact letterboxed (and optionally stamped) rasters that get encoded."""
    target = spec.resolution or _modal_resolution(stream.frames)
    out = []
    for frame in stream.frames:
        raster = letterbox(frame.raster(), target)
        if spec.timestamp_overlay:
            raster = _overlay_timestamp(raster, frame.capture_time)
        out.append(raster)
    return out


def assemble(
    stream: ScreenshotStream,
    spec: VideoSpec,
    out: str | Path,
    encoder: VideoEncoder | None = None,
    *,
    lossless: bool = False,
) -> VideoArtifact:
    """Encode one video frame per screenshot, in capture order, at spec.fps."""
    if not stream.frames:
        raise EmptyStream("cannot assemble a video from an empty stream")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    encoder = encoder or default_encoder()

    rasters = prepared_frames(stream, spec)
    with tempfile.TemporaryDirectory(prefix="autojournal-frames-") as tmp:
        tmp_dir = Path(tmp)
        paths = []
        for i, raster in enumerate(rasters):
            path = tmp_dir / f"{i:06d}.png"
            Image.fromarray(raster).save(path, format="PNG")
            paths.append(path)
        encoder.encode(paths, spec.fps, out, lossless=lossless)

    if not out.is_file() or out.stat().st_size == 0:
        raise WriteFailed(str(out), "encoder produced no output")
    return VideoArtifact(
        path=out,
        frame_count=len(stream.frames),
        duration_s=len(stream.frames) / spec.fps,
        covered_range=(stream.frames[0].capture_time, stream.frames[-1].capture_time),
    )


def probe(path: str | Path) -> tuple[int, float]:
    """Read (frame_count, fps) back from a container file."""
    cap = cv2.VideoCapture(str(path))
    try:
        if not cap.isOpened():
            raise WriteFailed(str(path), "container cannot be opened")
        return int(cap.get(cv2.CAP_PROP_FRAME_COUNT)), float(cap.get(cv2.CAP_PROP_FPS))
    finally:
        cap.release()


def read_frames(path: str | Path) -> list[np.ndarray]:
    """Decode a container back into RGB rasters, in stored order."""
    cap = cv2.VideoCapture(str(path))
    frames: list[np.ndarray] = []
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    finally:
        cap.release()
    return frames
