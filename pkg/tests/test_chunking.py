from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autojournal.chunking import Chunk, ChunkLimits, chunk_stream
from autojournal.errors import EmptyStream, FrameExceedsLimit
from autojournal.ingest import ScreenshotStream

from conftest import make_screenshot, make_stream


def _stream(sizes: list[int]) -> ScreenshotStream:
    frames = [
        make_screenshot(1000 + i * 10, (i % 200, 0, 0), encoded_bytes=size)
        for i, size in enumerate(sizes)
    ]
    return make_stream(*frames)


def test_count_limited_partition():
    chunks = chunk_stream(_stream([100] * 7), ChunkLimits(max_images=3, max_bytes=10**9))
    assert [len(c.frames) for c in chunks] == [3, 3, 1]


def test_singleton_stream():
    chunks = chunk_stream(_stream([100]))
    assert len(chunks) == 1
    assert chunks[0].ordinal == 0
    assert len(chunks[0].frames) == 1


def test_byte_limited_partition():
    mb = 1_000_000
    sizes = [mb] * 10
    limits = ChunkLimits(max_images=50, max_bytes=int(2.5 * mb))

    # independent greedy simulation over the fixture
    expected, count, acc = [], 0, 0
    for size in sizes:
        if count and (acc + size > limits.max_bytes):
            expected.append(count)
            count, acc = 0, 0
        count += 1
        acc += size
    expected.append(count)
    assert expected == [2, 2, 2, 2, 2]

    chunks = chunk_stream(_stream(sizes), limits)
    assert [len(c.frames) for c in chunks] == expected


def test_single_frame_over_byte_limit():
    with pytest.raises(FrameExceedsLimit):
        chunk_stream(_stream([100, 5000]), ChunkLimits(max_images=10, max_bytes=1000))


def test_empty_stream():
    with pytest.raises(EmptyStream):
        chunk_stream(ScreenshotStream(()))


def test_chunk_times_come_from_frames():
    chunks = chunk_stream(_stream([1] * 5), ChunkLimits(max_images=2, max_bytes=10**9))
    first = chunks[0]
    assert first.start_time == first.frames[0].capture_time
    assert first.end_time == first.frames[-1].capture_time
    assert first.start_time <= first.end_time


def test_limits_validation():
    with pytest.raises(ValueError):
        ChunkLimits(max_images=0)
    with pytest.raises(ValueError):
        ChunkLimits(max_bytes=0)
    with pytest.raises(ValueError):
        Chunk((), ordinal=0)


@st.composite
def stream_and_limits(draw):
    sizes = draw(st.lists(st.integers(1, 2000), min_size=1, max_size=60))
    max_images = draw(st.integers(1, 12))
    max_bytes = draw(st.integers(max(sizes), 6000))
    return _stream(sizes), ChunkLimits(max_images=max_images, max_bytes=max_bytes)


@given(stream_and_limits())
@settings(max_examples=200, deadline=None)
def test_partition_and_boundedness(case):
    stream, limits = case
    chunks = chunk_stream(stream, limits)

    flattened = [f for c in chunks for f in c.frames]
    assert flattened == list(stream.frames)

    for chunk in chunks:
        assert len(chunk.frames) <= limits.max_images
        assert chunk.payload_bytes <= limits.max_bytes

    assert [c.ordinal for c in chunks] == list(range(len(chunks)))
    starts = [c.start_time for c in chunks]
    ends = [c.end_time for c in chunks]
    assert starts == sorted(starts)
    assert ends == sorted(ends)


@given(stream_and_limits())
@settings(max_examples=100, deadline=None)
def test_deterministic(case):
    stream, limits = case
    assert chunk_stream(stream, limits) == chunk_stream(stream, limits)


@given(stream_and_limits())
@settings(max_examples=100, deadline=None)
def test_greedy_closes_only_when_forced(case):
    # every chunk but the last would overflow a limit if it absorbed the
    # next chunk's first frame
    stream, limits = case
    chunks = chunk_stream(stream, limits)
    for chunk, following in zip(chunks, chunks[1:]):
        head = following.frames[0]
        assert (
            len(chunk.frames) + 1 > limits.max_images
            or chunk.payload_bytes + head.payload_size > limits.max_bytes
        )
