"""Journal schemas: parse model output, load ground truth, persist canonically.

A journal file is a UTF-8 JSON object mapping consecutive string ordinals
"1".."N" to entry objects {event, feelings, reasoning}; ground-truth files
carry no reasoning field. Parsing of model output is deliberately tolerant
(code fences, lead-in prose, skipped ordinals, consecutive repeats) while
validation stays strict.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    FileUnreadable,
    NoJsonFound,
    SchemaViolation,
    TooManyEntries,
    WriteFailed,
)

STREAM_TEXT = "text"
STREAM_VIDEO = "video"
STREAM_GROUND_TRUTH = "ground_truth"
VALID_STREAMS = (STREAM_TEXT, STREAM_VIDEO, STREAM_GROUND_TRUTH)
GENERATED_STREAMS = (STREAM_TEXT, STREAM_VIDEO)

# Generated journals are prompted to produce no more than this many entries;
# ground truth is not capped.
MAX_GENERATED_ENTRIES = 30

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\s*\n?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class JournalEntry:
    event: str
    feelings: str
    reasoning: str | None = None

    def __post_init__(self) -> None:
        if not self.event.strip():
            raise SchemaViolation("entry has an empty event")
        if not self.feelings.strip():
            raise SchemaViolation("entry has empty feelings")


@dataclass(frozen=True)
class Journal:
    """Ordered journal entries for one participant-day; keys are positional."""

    entries: tuple[JournalEntry, ...]
    participant: str
    date: str
    stream: str

    def __post_init__(self) -> None:
        if self.stream not in VALID_STREAMS:
            raise SchemaViolation(f"unknown stream tag {self.stream!r}")
        if not self.entries:
            raise SchemaViolation("journal must contain at least one entry")
        if self.stream in GENERATED_STREAMS and len(self.entries) > MAX_GENERATED_ENTRIES:
            raise TooManyEntries(len(self.entries), MAX_GENERATED_ENTRIES)
        if self.stream == STREAM_GROUND_TRUTH:
            for entry in self.entries:
                if entry.reasoning is not None:
                    raise SchemaViolation("ground-truth entries must not carry reasoning")

    def events(self) -> list[str]:
        return [e.event for e in self.entries]

    def feelings(self) -> list[str]:
        return [e.feelings for e in self.entries]

    def as_dict(self) -> dict[str, dict[str, str]]:
        out: dict[str, dict[str, str]] = {}
        for i, entry in enumerate(self.entries, start=1):
            record = {"event": entry.event, "feelings": entry.feelings}
            if entry.reasoning is not None:
                record["reasoning"] = entry.reasoning
            out[str(i)] = record
        return out


def _balanced_object(text: str, start: int) -> str | None:
    """Extract the brace-balanced object starting at ``start``, if closed."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _extract_object(raw: str) -> dict:
    """Locate and parse the outermost JSON object in possibly-noisy text."""
    candidates: list[str] = []
    for match in _FENCE_RE.finditer(raw):
        candidates.append(match.group(1).strip())
    first = raw.find("{")
    if first != -1:
        balanced = _balanced_object(raw, first)
        if balanced is not None:
            candidates.append(balanced)
        last = raw.rfind("}")
        if last > first:
            candidates.append(raw[first : last + 1])
    for candidate in candidates:
        if not candidate.startswith("{"):
            inner = candidate.find("{")
            if inner == -1:
                continue
            candidate = candidate[inner:]
        try:
            parsed = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(parsed, dict):
            return parsed
    raise NoJsonFound("no JSON object found in model output")


def _coerce_text(value: object, field: str, key: str) -> str:
    if isinstance(value, str):
        return value
    # feelings occasionally arrive as a keyword array; render it as text
    if field == "feelings" and isinstance(value, list) and all(
        isinstance(v, str) for v in value
    ):
        return ", ".join(value)
    raise SchemaViolation(f"entry {key}: {field} must be text, got {type(value).__name__}")


def _entries_from_mapping(data: dict, stream: str) -> list[JournalEntry]:
    if not data:
        raise SchemaViolation("journal object has no entries")
    keyed: list[tuple[int, str, dict]] = []
    for key, value in data.items():
        if not str(key).strip().isdigit():
            raise SchemaViolation(f"entry key {key!r} is not a positive integer")
        if not isinstance(value, dict):
            raise SchemaViolation(f"entry {key} is not an object")
        keyed.append((int(key), str(key), value))
    keyed.sort(key=lambda item: item[0])

    entries: list[JournalEntry] = []
    for _, key, value in keyed:
        if "event" not in value or "feelings" not in value:
            raise SchemaViolation(f"entry {key} is missing event or feelings")
        reasoning = value.get("reasoning")
        if stream == STREAM_GROUND_TRUTH and reasoning is not None:
            raise SchemaViolation("ground-truth entries must not carry reasoning")
        if reasoning is not None and not isinstance(reasoning, str):
            raise SchemaViolation(f"entry {key}: reasoning must be text")
        entries.append(
            JournalEntry(
                event=_coerce_text(value["event"], "event", key),
                feelings=_coerce_text(value["feelings"], "feelings", key),
                reasoning=reasoning,
            )
        )
    return entries


def _collapse_repeats(entries: list[JournalEntry]) -> list[JournalEntry]:
    # consecutive entries with byte-identical event text are one hallucinated
    # repeat; keep the first
    collapsed: list[JournalEntry] = []
    for entry in entries:
        if collapsed and collapsed[-1].event == entry.event:
            continue
        collapsed.append(entry)
    return collapsed


def parse_journal(
    raw: str, stream: str, *, participant: str = "", date: str = ""
) -> Journal:
    """Parse raw model output into a validated Journal.

    Strips surrounding prose and code fences, renumbers skipped ordinals
    while preserving order, and collapses consecutive duplicate events.
    Raises NoJsonFound, SchemaViolation, or TooManyEntries (when a generated
    journal still has more than 30 entries after collapsing).
    """
    if stream not in VALID_STREAMS:
        raise SchemaViolation(f"unknown stream tag {stream!r}")
    if not raw or not raw.strip():
        raise NoJsonFound("model output is empty")
    data = _extract_object(raw)
    entries = _entries_from_mapping(data, stream)
    if stream in GENERATED_STREAMS:
        entries = _collapse_repeats(entries)
        if len(entries) > MAX_GENERATED_ENTRIES:
            raise TooManyEntries(len(entries), MAX_GENERATED_ENTRIES)
    return Journal(tuple(entries), participant=participant, date=date, stream=stream)


def load_ground_truth(path: str | Path) -> Journal:
    """Load a preprocessed human journal from ``.../<participant>/<date>.json``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation(f"{path} must contain a JSON object")
    entries = _entries_from_mapping(data, STREAM_GROUND_TRUTH)
    return Journal(
        tuple(entries),
        participant=path.parent.name,
        date=path.stem,
        stream=STREAM_GROUND_TRUTH,
    )


def load_journal(path: str | Path, stream: str, *, participant: str = "", date: str = "") -> Journal:
    """Load a generated journal previously written by write_journal."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    return parse_journal(text, stream, participant=participant, date=date)


def dumps_journal(journal: Journal) -> str:
    """Canonical serialization: ordinal order, two-space indent, UTF-8 text."""
    return json.dumps(journal.as_dict(), ensure_ascii=False, indent=2) + "\n"


def write_journal(journal: Journal, path: str | Path) -> None:
    """Write a journal in canonical form, creating parent directories."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_journal(journal), encoding="utf-8")
    except OSError as exc:
        raise WriteFailed(str(path), str(exc)) from exc
