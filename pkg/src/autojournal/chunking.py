"""Partition a screenshot stream into contiguous chunks for per-chunk analysis.

Packing is greedy left-to-right: a chunk closes as soon as adding the next
frame would break either the image-count or the payload-byte limit. Payload
is measured on encoded bytes, since provider limits apply to transmitted
data, not decoded rasters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyStream, FrameExceedsLimit
from .ingest import Screenshot, ScreenshotStream

DEFAULT_MAX_IMAGES = 50
DEFAULT_MAX_BYTES = 20_000_000


@dataclass(frozen=True)
class ChunkLimits:
    max_images: int = DEFAULT_MAX_IMAGES
    max_bytes: int = DEFAULT_MAX_BYTES

    def __post_init__(self) -> None:
        if self.max_images < 1:
            raise ValueError(f"max_images must be >= 1, got {self.max_images}")
        if self.max_bytes < 1:
            raise ValueError(f"max_bytes must be >= 1, got {self.max_bytes}")


@dataclass(frozen=True)
class Chunk:
    frames: tuple[Screenshot, ...]
    ordinal: int

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("chunk must contain at least one frame")
        if self.ordinal < 0:
            raise ValueError(f"ordinal must be >= 0, got {self.ordinal}")

    @property
    def start_time(self) -> int:
        return self.frames[0].capture_time

    @property
    def end_time(self) -> int:
        return self.frames[-1].capture_time

    @property
    def payload_bytes(self) -> int:
        return sum(f.payload_size for f in self.frames)


def chunk_stream(stream: ScreenshotStream, limits: ChunkLimits | None = None) -> list[Chunk]:
    """Split a stream into ordered chunks satisfying both limits.

    The chunks partition the stream exactly: concatenating their frames
    reproduces the input, in order. Raises FrameExceedsLimit if any single
    frame's encoded size is over ``limits.max_bytes``.
    """
    limits = limits or ChunkLimits()
    if not stream.frames:
        raise EmptyStream("cannot chunk an empty stream")

    chunks: list[Chunk] = []
    current: list[Screenshot] = []
    current_bytes = 0
    for frame in stream.frames:
        size = frame.payload_size
        if size > limits.max_bytes:
            raise FrameExceedsLimit(frame.source_path, size, limits.max_bytes)
        if current and (
            len(current) + 1 > limits.max_images or current_bytes + size > limits.max_bytes
        ):
            chunks.append(Chunk(tuple(current), ordinal=len(chunks)))
            current = []
            current_bytes = 0
        current.append(frame)
        current_bytes += size
    chunks.append(Chunk(tuple(current), ordinal=len(chunks)))
    return chunks
