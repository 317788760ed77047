"""Evaluation report: CSV for machines, an aligned score grid for humans.

The rendered table mirrors the per-participant day-by-day grid with event
and feeling columns per participant, one section per stream, scores at two
decimal places, plus a per-participant mean row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedReport
from .evaluation import EvalScores

CSV_COLUMNS = (
    "participant",
    "date",
    "stream",
    "event_t",
    "event_p",
    "event_overall",
    "feeling_t",
    "feeling_p",
    "feeling_overall",
)


@dataclass(frozen=True)
class ReportRow:
    participant: str
    date: str
    stream: str
    scores: EvalScores


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...]

    def __post_init__(self) -> None:
        ordered = sorted(self.rows, key=lambda r: (r.participant, r.date, r.stream))
        if list(self.rows) != ordered:
            raise MalformedReport("report rows must be sorted by (participant, date, stream)")

    @classmethod
    def from_rows(cls, rows: list[ReportRow]) -> "EvalReport":
        return cls(tuple(sorted(rows, key=lambda r: (r.participant, r.date, r.stream))))

    def participant_means(self, stream: str) -> dict[str, tuple[float, float]]:
        """Per-participant mean (event_overall, feeling_overall) for one stream."""
        means: dict[str, tuple[float, float]] = {}
        for participant in sorted({r.participant for r in self.rows}):
            rows = [r for r in self.rows if r.participant == participant and r.stream == stream]
            if rows:
                means[participant] = (
                    sum(r.scores.event_overall for r in rows) / len(rows),
                    sum(r.scores.feeling_overall for r in rows) / len(rows),
                )
        return means

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            s = row.scores
            writer.writerow(
                [
                    row.participant,
                    row.date,
                    row.stream,
                    repr(s.event_t),
                    repr(s.event_p),
                    repr(s.event_overall),
                    repr(s.feeling_t),
                    repr(s.feeling_p),
                    repr(s.feeling_overall),
                ]
            )
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def read_csv(cls, path: str | Path) -> "EvalReport":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise MalformedReport(f"cannot read report {path}: {exc}") from exc
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise MalformedReport(f"report header must be {','.join(CSV_COLUMNS)}")
        rows = []
        for record in reader:
            try:
                rows.append(
                    ReportRow(
                        participant=record["participant"],
                        date=record["date"],
                        stream=record["stream"],
                        scores=EvalScores(
                            event_t=float(record["event_t"]),
                            event_p=float(record["event_p"]),
                            event_overall=float(record["event_overall"]),
                            feeling_t=float(record["feeling_t"]),
                            feeling_p=float(record["feeling_p"]),
                            feeling_overall=float(record["feeling_overall"]),
                        ),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedReport(f"bad report row {record}: {exc}") from exc
        if not rows:
            raise MalformedReport("report has no rows")
        return cls.from_rows(rows)


def render_table(report: EvalReport) -> str:
    """Aligned day-by-participant grid, one section per stream, two decimals."""
    if not report.rows:
        raise MalformedReport("report has no rows")
    lines: list[str] = []
    streams = sorted({r.stream for r in report.rows})
    for stream in streams:
        stream_rows = [r for r in report.rows if r.stream == stream]
        participants = sorted({r.participant for r in stream_rows})
        dates = sorted({r.date for r in stream_rows})
        cells = {(r.participant, r.date): r.scores for r in stream_rows}

        lines.append(f"stream: {stream}")
        header = f"{'date':<12}"
        sub = f"{'':<12}"
        for participant in participants:
            header += f"  {participant:^16}"
            sub += f"  {'event':>7} {'feeling':>8}"
        lines.append(header.rstrip())
        lines.append(sub.rstrip())
        for date in dates:
            line = f"{date:<12}"
            for participant in participants:
                scores = cells.get((participant, date))
                if scores is None:
                    line += f"  {'-':>7} {'-':>8}"
                else:
                    line += f"  {scores.event_overall:>7.2f} {scores.feeling_overall:>8.2f}"
            lines.append(line.rstrip())
        means = report.participant_means(stream)
        line = f"{'mean':<12}"
        for participant in participants:
            event_mean, feeling_mean = means[participant]
            line += f"  {event_mean:>7.2f} {feeling_mean:>8.2f}"
        lines.append(line.rstrip())
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
