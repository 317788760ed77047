from __future__ import annotations

import hashlib

import numpy as np
import pytest

from autojournal.errors import EmptyStream, EncoderUnavailable
from autojournal.ingest import ScreenshotStream
from autojournal.video import (
    FfmpegEncoder,
    OpenCvEncoder,
    VideoSpec,
    assemble,
    letterbox,
    prepared_frames,
    probe,
    read_frames,
)

from conftest import make_screenshot, make_stream


def _noise_stream(n: int, seed: int = 0, gap_after: int | None = None, gap_ms: int = 0):
    rng = np.random.default_rng(seed)
    frames = []
    t = 1_000_000
    for i in range(n):
        raster = rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)
        frames.append(make_screenshot(t, raster=raster, source_path=f"{t}.png"))
        t += 3000
        if gap_after is not None and i + 1 == gap_after:
            t += gap_ms
    return make_stream(*frames)


class TestAssemble:
    def test_ninety_frames_three_seconds(self, tmp_path):
        stream = _noise_stream(90)
        artifact = assemble(
            stream, VideoSpec(fps=30), tmp_path / "day.avi", OpenCvEncoder(), lossless=True
        )
        assert artifact.frame_count == 90
        assert artifact.duration_s == pytest.approx(3.0, abs=1 / 30)
        frame_count, fps = probe(artifact.path)
        assert frame_count == 90
        assert frame_count / fps == pytest.approx(3.0, abs=1 / 30)

    def test_single_frame(self, tmp_path):
        stream = _noise_stream(1)
        artifact = assemble(
            stream, VideoSpec(fps=30), tmp_path / "one.avi", OpenCvEncoder(), lossless=True
        )
        assert artifact.frame_count == 1
        assert artifact.duration_s == pytest.approx(1 / 30, abs=1e-9)

    def test_capture_gap_does_not_change_duration(self, tmp_path):
        gapless = _noise_stream(12, seed=1)
        gappy = _noise_stream(12, seed=2, gap_after=5, gap_ms=600_000)
        a = assemble(gapless, VideoSpec(fps=30), tmp_path / "a.avi", OpenCvEncoder(), lossless=True)
        b = assemble(gappy, VideoSpec(fps=30), tmp_path / "b.avi", OpenCvEncoder(), lossless=True)
        count_a, fps_a = probe(a.path)
        count_b, fps_b = probe(b.path)
        assert count_a / fps_a == count_b / fps_b
        assert a.duration_s == b.duration_s

    def test_covered_range(self, tmp_path):
        stream = _noise_stream(5)
        artifact = assemble(
            stream, VideoSpec(fps=30), tmp_path / "r.avi", OpenCvEncoder(), lossless=True
        )
        assert artifact.covered_range == (
            stream.frames[0].capture_time,
            stream.frames[-1].capture_time,
        )

    def test_empty_stream(self, tmp_path):
        with pytest.raises(EmptyStream):
            assemble(ScreenshotStream(()), VideoSpec(), tmp_path / "x.avi")

    def test_lossless_round_trip_preserves_order(self, tmp_path):
        stream = _noise_stream(10, seed=3)
        artifact = assemble(
            stream, VideoSpec(fps=30), tmp_path / "lossless.avi", OpenCvEncoder(), lossless=True
        )
        input_checksums = [
            hashlib.sha256(f.raster().tobytes()).hexdigest() for f in stream.frames
        ]
        output_checksums = [
            hashlib.sha256(np.ascontiguousarray(f).tobytes()).hexdigest()
            for f in read_frames(artifact.path)
        ]
        assert output_checksums == input_checksums

    def test_deterministic_output_bytes(self, tmp_path):
        stream = _noise_stream(8, seed=4)
        a = assemble(stream, VideoSpec(fps=30), tmp_path / "d1.avi", OpenCvEncoder(), lossless=True)
        b = assemble(stream, VideoSpec(fps=30), tmp_path / "d2.avi", OpenCvEncoder(), lossless=True)
        assert a.path.read_bytes() == b.path.read_bytes()

    def test_mixed_resolutions_letterboxed_to_modal(self, tmp_path):
        rng = np.random.default_rng(6)
        frames = [
            make_screenshot(1000, raster=rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)),
            make_screenshot(4000, raster=rng.integers(0, 256, (48, 64, 3), dtype=np.uint8)),
            make_screenshot(7000, raster=rng.integers(0, 256, (24, 64, 3), dtype=np.uint8)),
        ]
        stream = make_stream(*frames)
        artifact = assemble(
            stream, VideoSpec(fps=30), tmp_path / "mixed.avi", OpenCvEncoder(), lossless=True
        )
        decoded = read_frames(artifact.path)
        assert all(f.shape == (48, 64, 3) for f in decoded)
        assert artifact.frame_count == 3


class TestLetterbox:
    def test_passthrough_at_target(self):
        raster = np.arange(48 * 64 * 3, dtype=np.uint8).reshape(48, 64, 3)
        assert letterbox(raster, (64, 48)) is raster

    def test_preserves_aspect_with_padding(self):
        raster = np.full((30, 60, 3), 255, dtype=np.uint8)  # 2:1 wide
        boxed = letterbox(raster, (60, 60))
        assert boxed.shape == (60, 60, 3)
        assert np.all(boxed[0] == 0)  # top padding
        assert np.all(boxed[-1] == 0)  # bottom padding
        assert np.all(boxed[30] == 255)  # content band

    def test_never_stretches(self):
        # a solid square inside a square target with wider aspect stays square
        raster = np.full((10, 20, 3), 200, dtype=np.uint8)
        boxed = letterbox(raster, (40, 40))
        content_rows = np.where(boxed.any(axis=(1, 2)))[0]
        content_cols = np.where(boxed.any(axis=(0, 2)))[0]
        width = content_cols[-1] - content_cols[0] + 1
        height = content_rows[-1] - content_rows[0] + 1
        assert width / height == pytest.approx(2.0, rel=0.1)


class TestTimestampOverlay:
    def test_overlay_changes_frames(self):
        stream = _noise_stream(2, seed=9)
        plain = prepared_frames(stream, VideoSpec(fps=30))
        stamped = prepared_frames(stream, VideoSpec(fps=30, timestamp_overlay=True))
        assert not np.array_equal(plain[0], stamped[0])
        assert plain[0].shape == stamped[0].shape


class TestEncoders:
    def test_missing_ffmpeg_binary(self, tmp_path):
        stream = _noise_stream(2)
        with pytest.raises(EncoderUnavailable):
            assemble(
                stream,
                VideoSpec(fps=30),
                tmp_path / "x.avi",
                FfmpegEncoder("/nonexistent/ffmpeg"),
                lossless=True,
            )

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            VideoSpec(fps=0)
        with pytest.raises(ValueError):
            VideoSpec(resolution=(0, 10))
