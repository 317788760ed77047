#!/usr/bin/env python3
"""Regenerate the committed fixture corpus under fixtures/.

Produces a 3-participant x 5-day set: synthetic screenshot days (with exact
duplicates and one invalid file each), ground-truth journals, scripted mock
responses for every chunk description and journal summarization, and the
demo run config. Everything is seeded, so regeneration is reproducible.

Usage: python scripts/make_fixtures.py [--root PATH]
"""

from __future__ import annotations

import argparse
import json
import random
import shutil
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from autojournal.chunking import ChunkLimits, chunk_stream  # noqa: E402
from autojournal.ingest import load_stream  # noqa: E402

PARTICIPANTS = ["p01", "p02", "p03"]
DATES = ["2025-03-03", "2025-03-04", "2025-03-05", "2025-03-06", "2025-03-07"]
FRAME_W, FRAME_H = 64, 48
FRAMES_PER_DAY = 13
CHUNK_MAX_IMAGES = 5

# (ground-truth event, ground-truth feelings,
#  generated event, generated feelings, generated reasoning)
ACTIVITIES = [
    (
        "Checked the weather forecast",
        "calm, prepared",
        "Looked up the weather forecast app in the morning",
        "prepared, unhurried",
        "Checking conditions before heading out suggests planning ahead.",
    ),
    (
        "Read the group chat",
        "amused, connected",
        "Caught up on unread group chat messages",
        "amused, included",
        "Reacting to jokes in the chat points to light social enjoyment.",
    ),
    (
        "Video call with family",
        "warm, loved",
        "Had a video call with their family",
        "happy, connected",
        "A long family call usually reflects closeness and comfort.",
    ),
    (
        "Listened to a study playlist",
        "focused",
        "Played a study playlist while reading notes",
        "focused, steady",
        "Background music during revision suggests sustained concentration.",
    ),
    (
        "Ordered groceries online",
        "organized",
        "Placed a grocery order in a shopping app",
        "organized, satisfied",
        "Completing the order flow end to end indicates errands handled.",
    ),
    (
        "Scrolled the news feed",
        "curious, uneasy",
        "Browsed news headlines for a while",
        "curious, slightly anxious",
        "Lingering on serious headlines hints at mild unease.",
    ),
    (
        "Set an alarm for the morning",
        "responsible",
        "Adjusted the morning alarms before bed",
        "responsible, sleepy",
        "Editing alarms late in the evening points to winding down.",
    ),
    (
        "Watched short videos",
        "entertained, guilty",
        "Watched a stream of short videos",
        "entertained, distracted",
        "Rapid swiping through clips suggests idle entertainment.",
    ),
    (
        "Replied to a lecture email",
        "dutiful",
        "Answered an email about a lecture",
        "relieved, productive",
        "Sending the reply right away suggests clearing a pending task.",
    ),
    (
        "Booked a bus ticket",
        "hopeful",
        "Bought a bus ticket in a travel app",
        "excited, hopeful",
        "Paying for travel implies looking forward to a trip.",
    ),
]

WRAPPERS = ["plain", "fenced", "prose", "skipped"]


def day_start_ms(date: str) -> int:
    dt = datetime.strptime(date, "%Y-%m-%d").replace(hour=9, tzinfo=timezone.utc)
    return int(dt.timestamp() * 1000)


def make_screenshot_day(day_dir: Path, rng: random.Random, date: str) -> None:
    day_dir.mkdir(parents=True, exist_ok=True)
    np_rng = np.random.default_rng(rng.randrange(2**32))
    t = day_start_ms(date)
    previous = None
    for i in range(FRAMES_PER_DAY):
        if i in (4, 5, 9) and previous is not None:
            raster = previous  # exact duplicate of the prior frame
        else:
            raster = np_rng.integers(0, 256, (FRAME_H, FRAME_W, 3), dtype=np.uint8)
        Image.fromarray(raster).save(day_dir / f"{t}.png", format="PNG")
        previous = raster
        t += 3000
    (day_dir / f"{t}.png").write_bytes(b"")  # one invalid capture per day


def wrap_raw_journal(payload: dict, style: str) -> str:
    body = json.dumps(payload, indent=2)
    if style == "plain":
        return body + "\n"
    if style == "fenced":
        return f"Here is the daily journal.\n```json\n{body}\n```\n"
    if style == "prose":
        return f"Sure! The journal entries are below.\n{body}\nLet me know if anything is missing.\n"
    if style == "skipped":
        entries = list(json.loads(body).values())
        skipped = {}
        key = 1
        for entry in entries:
            skipped[str(key)] = entry
            key += 2  # leaves gaps the parser must renumber
        return json.dumps(skipped, indent=2) + "\n"
    raise ValueError(style)


def journal_payload(indices: list[int], with_reasoning: bool) -> dict:
    payload = {}
    for ordinal, index in enumerate(indices, start=1):
        gt_event, gt_feel, pred_event, pred_feel, reasoning = ACTIVITIES[index]
        if with_reasoning:
            payload[str(ordinal)] = {
                "event": pred_event,
                "feelings": pred_feel,
                "reasoning": reasoning,
            }
        else:
            payload[str(ordinal)] = {"event": gt_event, "feelings": gt_feel}
    return payload


def describe_text(indices: list[int]) -> str:
    lines = [
        f"The user {ACTIVITIES[i][2][0].lower()}{ACTIVITIES[i][2][1:]}." for i in indices
    ]
    return " ".join(lines) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--root", type=Path, default=Path(__file__).resolve().parents[1])
    args = parser.parse_args()
    fixtures = args.root / "fixtures"
    if fixtures.exists():
        shutil.rmtree(fixtures)

    for participant in PARTICIPANTS:
        for date in DATES:
            rng = random.Random(f"{participant}/{date}")
            day_dir = fixtures / "screenshots" / participant / date
            make_screenshot_day(day_dir, rng, date)

            picks = rng.sample(range(len(ACTIVITIES)), k=rng.randint(3, 5))
            gt = journal_payload(picks, with_reasoning=False)
            gt_path = fixtures / "ground_truth" / participant / f"{date}.json"
            gt_path.parent.mkdir(parents=True, exist_ok=True)
            gt_path.write_text(json.dumps(gt, indent=2) + "\n", encoding="utf-8")

            # the text stream drops one activity and the video stream another,
            # so the two streams score differently against the same truth
            text_picks = picks[:-1] if len(picks) > 3 else picks
            video_picks = picks[1:] if len(picks) > 3 else picks

            stream, _ = load_stream(day_dir)
            chunks = chunk_stream(stream, ChunkLimits(max_images=CHUNK_MAX_IMAGES))
            describe_dir = fixtures / "mock_responses" / "describe" / participant / date
            describe_dir.mkdir(parents=True, exist_ok=True)
            for chunk in chunks:
                share = text_picks[
                    chunk.ordinal * len(text_picks) // len(chunks):
                    (chunk.ordinal + 1) * len(text_picks) // len(chunks)
                ] or [text_picks[0]]
                (describe_dir / f"{chunk.ordinal:04d}.txt").write_text(
                    describe_text(share), encoding="utf-8"
                )

            style = WRAPPERS[rng.randrange(4)]
            text_raw = wrap_raw_journal(journal_payload(text_picks, True), style)
            text_path = fixtures / "mock_responses" / "journal_text" / participant / f"{date}.txt"
            text_path.parent.mkdir(parents=True, exist_ok=True)
            text_path.write_text(text_raw, encoding="utf-8")

            video_style = WRAPPERS[rng.randrange(4)]
            video_raw = wrap_raw_journal(journal_payload(video_picks, True), video_style)
            video_path = fixtures / "mock_responses" / "journal_video" / participant / f"{date}.txt"
            video_path.parent.mkdir(parents=True, exist_ok=True)
            video_path.write_text(video_raw, encoding="utf-8")

    config = f"""\
participants: [{", ".join(PARTICIPANTS)}]
dates: [{", ".join(DATES)}]
streams: [text, video]
out_dir: ../out

data:
  screenshots_dir: screenshots
  ground_truth_dir: ground_truth

ingest:
  dedup_threshold: 1.0
  interval_s: 3

chunk:
  max_images: {CHUNK_MAX_IMAGES}

video:
  fps: 30
  lossless: true

model:
  provider: mock
  script_dir: mock_responses
  parallelism: 2

eval:
  provider: stub
  stub_dim: 256
"""
    (fixtures / "config.yaml").write_text(config, encoding="utf-8")
    print(f"fixtures written under {fixtures}")


if __name__ == "__main__":
    main()
