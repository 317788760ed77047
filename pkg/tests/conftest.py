from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from autojournal.ingest import Screenshot, ScreenshotStream
from autojournal.journal import Journal, JournalEntry

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def write_run_config(tmp_path: Path, **overrides) -> Path:
    """A run config against the committed fixtures, out_dir in tmp by default."""
    raw = yaml.safe_load((FIXTURES_DIR / "config.yaml").read_text(encoding="utf-8"))
    raw["out_dir"] = str(tmp_path / "out")
    raw["data"] = {
        "screenshots_dir": str(FIXTURES_DIR / "screenshots"),
        "ground_truth_dir": str(FIXTURES_DIR / "ground_truth"),
    }
    raw["model"]["script_dir"] = str(FIXTURES_DIR / "mock_responses")
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


def solid_raster(width: int, height: int, rgb: tuple[int, int, int]) -> np.ndarray:
    return np.full((height, width, 3), rgb, dtype=np.uint8)


def make_screenshot(
    capture_time: int,
    rgb: tuple[int, int, int] = (0, 0, 0),
    width: int = 8,
    height: int = 6,
    source_path: str | None = None,
    raster: np.ndarray | None = None,
    encoded_bytes: int | None = None,
) -> Screenshot:
    if raster is None:
        raster = solid_raster(width, height, rgb)
    height, width = raster.shape[:2]
    return Screenshot(
        capture_time=capture_time,
        width=width,
        height=height,
        pixels=raster.tobytes(),
        source_path=source_path or f"{capture_time}.png",
        encoded_bytes=encoded_bytes,
    )


def make_stream(*frames: Screenshot, interval_s: float = 3.0) -> ScreenshotStream:
    ordered = sorted(frames, key=lambda f: (f.capture_time, f.source_path))
    return ScreenshotStream(tuple(ordered), declared_interval_s=interval_s)


def save_png(directory: Path, name: str, raster: np.ndarray) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    Image.fromarray(raster).save(path, format="PNG")
    return path


def make_journal(
    pairs: list[tuple[str, str]] | list[tuple[str, str, str]],
    stream: str = "ground_truth",
    participant: str = "p01",
    date: str = "2025-03-03",
) -> Journal:
    entries = []
    for pair in pairs:
        if len(pair) == 2:
            event, feelings = pair
            reasoning = None
        else:
            event, feelings, reasoning = pair
        entries.append(JournalEntry(event=event, feelings=feelings, reasoning=reasoning))
    return Journal(tuple(entries), participant=participant, date=date, stream=stream)
