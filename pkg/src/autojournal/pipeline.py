"""Orchestrate ingest, generation, and evaluation over participant-days.

Each (participant, date) is an independent job; a failure there is recorded
in the run manifest and never aborts the other days. All writes go to
job-unique paths, so days can run in parallel without contention.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .chunking import ChunkLimits, chunk_stream
from .config import RunConfig
from .errors import MissingGroundTruth, MissingPrediction
from .evaluation import (
    EmbeddingClient,
    HashedEmbeddingProvider,
    HttpEmbeddingProvider,
    evaluate_pair,
)
from .gateway import (
    ChunkDescription,
    DecodingParams,
    HttpProvider,
    MockProvider,
    ModelGateway,
    Provider,
)
from .ingest import IngestStats, load_stream
from .journal import (
    STREAM_TEXT,
    STREAM_VIDEO,
    load_ground_truth,
    load_journal,
    parse_journal,
    write_journal,
)
from .reporting import EvalReport, ReportRow
from .video import VideoSpec, assemble, default_encoder

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JobResult:
    participant: str
    date: str
    stream: str
    status: str  # ok | failed
    output: str | None = None
    error: str | None = None


@dataclass(frozen=True)
class RunManifest:
    results: tuple[JobResult, ...]

    @property
    def failed(self) -> list[JobResult]:
        return [r for r in self.results if r.status != "ok"]

    def to_json(self) -> str:
        payload = {
            "results": [
                {
                    "participant": r.participant,
                    "date": r.date,
                    "stream": r.stream,
                    "status": r.status,
                    "output": r.output,
                    "error": r.error,
                }
                for r in self.results
            ]
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")


def build_provider(config: RunConfig) -> Provider:
    if config.model.provider == "mock":
        assert config.model.script_dir is not None
        return MockProvider(
            config.model.script_dir, max_payload_bytes=config.model.max_payload_bytes
        )
    assert config.model.endpoint is not None
    return HttpProvider(config.model.endpoint, max_payload_bytes=config.model.max_payload_bytes)


def build_gateway(config: RunConfig, provider: Provider | None = None) -> ModelGateway:
    return ModelGateway(
        provider or build_provider(config),
        params=DecodingParams(
            temperature=config.model.temperature, top_p=config.model.top_p
        ),
        interval_s=config.ingest.interval_s,
        retries=config.model.retries,
        backoff_s=config.model.backoff_s,
        image_timeout_s=config.model.image_timeout_s,
        video_timeout_s=config.model.video_timeout_s,
        rpm=config.model.rpm,
    )


def build_embedding_client(config: RunConfig) -> EmbeddingClient:
    if config.eval.provider == "stub":
        return EmbeddingClient(HashedEmbeddingProvider(config.eval.stub_dim))
    return EmbeddingClient(HttpEmbeddingProvider(config.eval.endpoint))


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def generate_text_journal(
    config: RunConfig, gateway: ModelGateway, participant: str, date: str
) -> Path:
    """Ingest, chunk, describe, and summarize one day's text-stream journal."""
    stream, stats = load_stream(
        config.screenshots_path(participant, date),
        config.ingest.timestamp_pattern,
        dedup_threshold=config.ingest.dedup_threshold,
        interval_s=config.ingest.interval_s,
        dimension_tolerance=config.ingest.dimension_tolerance,
    )
    logger.info("%s %s: %s", participant, date, stats)
    chunks = chunk_stream(
        stream, ChunkLimits(config.chunk.max_images, config.chunk.max_bytes)
    )
    inter = config.intermediate_dir(participant, date)

    def describe(chunk):
        return gateway.describe_chunk(
            chunk, tags={"mock_key": f"describe/{participant}/{date}/{chunk.ordinal:04d}"}
        )

    if config.model.parallelism > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.model.parallelism) as pool:
            texts = list(pool.map(describe, chunks))
    else:
        texts = [describe(c) for c in chunks]

    descriptions = []
    for chunk, text in zip(chunks, texts):
        _write_text(inter / "descriptions" / f"{chunk.ordinal:04d}.txt", text)
        descriptions.append(
            ChunkDescription(start_time=chunk.start_time, end_time=chunk.end_time, text=text)
        )

    raw = gateway.summarize_text_journal(
        descriptions, tags={"mock_key": f"journal_text/{participant}/{date}"}
    )
    _write_text(inter / "text.raw.txt", raw)
    journal = parse_journal(raw, STREAM_TEXT, participant=participant, date=date)
    out = config.journal_path(participant, date, STREAM_TEXT)
    write_journal(journal, out)
    return out


def generate_video_journal(
    config: RunConfig, gateway: ModelGateway, participant: str, date: str
) -> Path:
    """Ingest, assemble the day's video, and summarize it into a journal."""
    stream, stats = load_stream(
        config.screenshots_path(participant, date),
        config.ingest.timestamp_pattern,
        dedup_threshold=config.ingest.dedup_threshold,
        interval_s=config.ingest.interval_s,
        dimension_tolerance=config.ingest.dimension_tolerance,
    )
    logger.info("%s %s: %s", participant, date, stats)
    spec = VideoSpec(
        fps=config.video.fps,
        resolution=config.video.resolution,
        timestamp_overlay=config.video.timestamp_overlay,
    )
    artifact = assemble(
        stream,
        spec,
        config.video_path(participant, date),
        encoder=default_encoder(config.video.encoder_path),
        lossless=config.video.lossless,
    )
    raw = gateway.summarize_video_journal(
        artifact, tags={"mock_key": f"journal_video/{participant}/{date}"}
    )
    _write_text(config.intermediate_dir(participant, date) / "video.raw.txt", raw)
    journal = parse_journal(raw, STREAM_VIDEO, participant=participant, date=date)
    out = config.journal_path(participant, date, STREAM_VIDEO)
    write_journal(journal, out)
    return out


def generate_run(
    config: RunConfig,
    *,
    participants: tuple[str, ...] | None = None,
    dates: tuple[str, ...] | None = None,
    streams: tuple[str, ...] | None = None,
) -> RunManifest:
    """Generate journals for every selected (participant, date, stream)."""
    participants = participants or config.participants
    dates = dates or config.dates
    streams = streams or config.streams
    gateway = build_gateway(config)

    generators = {STREAM_TEXT: generate_text_journal, STREAM_VIDEO: generate_video_journal}
    jobs = [(p, d, s) for p in participants for d in dates for s in streams]

    def run_job(job: tuple[str, str, str]) -> JobResult:
        participant, date, stream = job
        try:
            out = generators[stream](config, gateway, participant, date)
            return JobResult(participant, date, stream, "ok", output=str(out))
        except Exception as exc:
            logger.error("%s %s %s failed: %s", participant, date, stream, exc)
            return JobResult(participant, date, stream, "failed", error=str(exc))

    if config.max_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]

    manifest = RunManifest(
        tuple(sorted(results, key=lambda r: (r.participant, r.date, r.stream)))
    )
    manifest.write(config.out_dir / "run_manifest.json")
    return manifest


def inspect_run(
    config: RunConfig,
    *,
    participants: tuple[str, ...] | None = None,
    dates: tuple[str, ...] | None = None,
) -> dict[str, IngestStats]:
    """Ingest statistics per participant-day, keyed "participant/date"."""
    stats: dict[str, IngestStats] = {}
    for participant in participants or config.participants:
        for date in dates or config.dates:
            _, day_stats = load_stream(
                config.screenshots_path(participant, date),
                config.ingest.timestamp_pattern,
                dedup_threshold=config.ingest.dedup_threshold,
                interval_s=config.ingest.interval_s,
                dimension_tolerance=config.ingest.dimension_tolerance,
            )
            stats[f"{participant}/{date}"] = day_stats
    return stats


def evaluate_run(config: RunConfig) -> EvalReport:
    """Score every configured (participant, date, stream) against ground truth."""
    client = build_embedding_client(config)
    rows: list[ReportRow] = []
    for participant in config.participants:
        for date in config.dates:
            gt_path = config.ground_truth_path(participant, date)
            if not gt_path.is_file():
                raise MissingGroundTruth(participant, date)
            truth = load_ground_truth(gt_path)
            for stream in config.streams:
                pred_path = config.journal_path(participant, date, stream)
                if not pred_path.is_file():
                    raise MissingPrediction(participant, date, stream)
                pred = load_journal(pred_path, stream, participant=participant, date=date)
                scores = evaluate_pair(truth, pred, client)
                rows.append(ReportRow(participant, date, stream, scores))
    return EvalReport.from_rows(rows)
