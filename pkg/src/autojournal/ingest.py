"""Load, validate, order, and deduplicate a directory of raw screenshots.

Capture timestamps come from filenames (epoch milliseconds by default);
image metadata is ignored so that re-encoded files keep their identity.
Duplicate removal compares each frame against the previous retained frame
only: a recurring screen after an interruption is a distinct event in time
and is kept.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DirectoryUnreadable, EmptyStream, NoValidFrames, TimestampUnparseable

logger = logging.getLogger(__name__)

# Filenames are `<epoch_ms>.<ext>` unless configured otherwise; the `ts`
# group (or group 1) must capture the epoch milliseconds.
DEFAULT_TIMESTAMP_PATTERN = r"^(?P<ts>\d+)\.(?:png|jpe?g)$"

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}

DEFAULT_INTERVAL_S = 3.0
DEFAULT_DEDUP_THRESHOLD = 1.0


@dataclass(frozen=True)
class Screenshot:
    """One captured frame, decoded to a canonical row-major 8-bit RGB raster."""

    capture_time: int  # epoch milliseconds, UTC
    width: int
    height: int
    pixels: bytes
    source_path: str
    encoded_bytes: int | None = None  # on-disk size; None for synthetic frames

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"non-positive dimensions {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel buffer is {len(self.pixels)} bytes, expected "
                f"{self.width * self.height * 3} for {self.width}x{self.height} RGB"
            )
        if self.capture_time <= 0:
            raise ValueError(f"capture_time must be positive, got {self.capture_time}")

    @property
    def payload_size(self) -> int:
        """Encoded size used for payload budgeting; falls back to the raster size."""
        return self.encoded_bytes if self.encoded_bytes is not None else len(self.pixels)

    def raster(self) -> np.ndarray:
        """Pixels as an (height, width, 3) uint8 array."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )


@dataclass(frozen=True)
class ScreenshotStream:
    """Time-ordered screenshots; ties on capture_time break by source_path."""

    frames: tuple[Screenshot, ...]
    declared_interval_s: float = DEFAULT_INTERVAL_S

    def __post_init__(self) -> None:
        keys = [(f.capture_time, f.source_path) for f in self.frames]
        if keys != sorted(keys):
            raise ValueError("frames are not in (capture_time, source_path) order")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class IngestStats:
    total_found: int
    invalid_dropped: int
    duplicates_dropped: int
    retained: int

    def __post_init__(self) -> None:
        if self.retained + self.invalid_dropped + self.duplicates_dropped != self.total_found:
            raise ValueError("ingest stats do not account for every file found")


def pixel_similarity(a: Screenshot, b: Screenshot) -> float:
    """Fraction of coinciding pixels; 0.0 when dimensions differ.

    A pixel coincides only when all three channels match. Symmetric in its
    arguments, and 1.0 exactly for byte-identical rasters.
    """
    if (a.width, a.height) != (b.width, b.height):
        return 0.0
    if a.pixels == b.pixels:
        return 1.0
    matches = (a.raster() == b.raster()).all(axis=2)
    return float(matches.mean())


def dedup(
    stream: ScreenshotStream, threshold: float = DEFAULT_DEDUP_THRESHOLD
) -> tuple[ScreenshotStream, int]:
    """Drop frames whose similarity to the previous retained frame reaches threshold.

    The scan is a sequential fold in time order; the first frame is always
    retained and relative order is preserved. At the default threshold of 1.0
    only byte-identical consecutive rasters are dropped.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not stream.frames:
        raise EmptyStream("cannot deduplicate an empty stream")

    retained: list[Screenshot] = [stream.frames[0]]
    dropped = 0
    for frame in stream.frames[1:]:
        if pixel_similarity(retained[-1], frame) >= threshold:
            dropped += 1
        else:
            retained.append(frame)
    return (
        ScreenshotStream(tuple(retained), declared_interval_s=stream.declared_interval_s),
        dropped,
    )


def _decode(path: Path) -> tuple[int, int, bytes]:
    with Image.open(path) as img:
        rgb = img.convert("RGB")  # canonical layout; alpha dropped
        return rgb.width, rgb.height, rgb.tobytes()


def load_stream(
    directory: str | Path,
    timestamp_pattern: str = DEFAULT_TIMESTAMP_PATTERN,
    *,
    dedup_threshold: float = DEFAULT_DEDUP_THRESHOLD,
    interval_s: float = DEFAULT_INTERVAL_S,
    dimension_tolerance: int = 0,
) -> tuple[ScreenshotStream, IngestStats]:
    """Load every screenshot in a directory into a deduplicated, time-sorted stream.

    Invalid frames (zero-byte files, decode failures, and frames whose
    dimensions differ from the stream's modal dimensions by more than
    ``dimension_tolerance`` pixels) are dropped and counted. Files with an
    image extension whose name does not match ``timestamp_pattern`` raise
    TimestampUnparseable; files without an image extension are ignored.
    """
    root = Path(directory)
    if not root.is_dir():
        raise DirectoryUnreadable(f"not a readable directory: {root}")
    try:
        entries = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
    except OSError as exc:
        raise DirectoryUnreadable(f"cannot list {root}: {exc}") from exc

    rule = re.compile(timestamp_pattern, re.IGNORECASE)
    total_found = len(entries)
    invalid = 0
    decoded: list[Screenshot] = []
    for path in entries:
        match = rule.search(path.name)
        if match is None:
            raise TimestampUnparseable(str(path))
        group = match.groupdict().get("ts") or match.group(1)
        capture_time = int(group)
        try:
            width, height, pixels = _decode(path)
            frame = Screenshot(
                capture_time=capture_time,
                width=width,
                height=height,
                pixels=pixels,
                source_path=str(path),
                encoded_bytes=path.stat().st_size,
            )
        except Exception as exc:  # undecodable file is invalid, not fatal
            logger.debug("dropping invalid image %s: %s", path, exc)
            invalid += 1
            continue
        decoded.append(frame)

    if decoded:
        modal_w, modal_h = Counter((f.width, f.height) for f in decoded).most_common(1)[0][0]
        kept = []
        for frame in decoded:
            if max(abs(frame.width - modal_w), abs(frame.height - modal_h)) > dimension_tolerance:
                logger.debug(
                    "dropping off-size image %s (%dx%d vs modal %dx%d)",
                    frame.source_path, frame.width, frame.height, modal_w, modal_h,
                )
                invalid += 1
            else:
                kept.append(frame)
        decoded = kept

    if not decoded:
        raise NoValidFrames(f"no decodable screenshots in {root}")

    decoded.sort(key=lambda f: (f.capture_time, f.source_path))
    stream = ScreenshotStream(tuple(decoded), declared_interval_s=interval_s)
    stream, duplicates = dedup(stream, dedup_threshold)
    stats = IngestStats(
        total_found=total_found,
        invalid_dropped=invalid,
        duplicates_dropped=duplicates,
        retained=len(stream.frames),
    )
    return stream, stats
