"""Provider-agnostic client for the multimodal model calls.

Carries the three prompt templates shipped under ``prompts/`` and the fixed
decoding parameters (temperature 0.0, top_p 1.0). Two providers are built
in: an HTTP provider for a live endpoint, and a scripted mock that reads
canned responses so the whole pipeline runs offline and deterministically.
"""

from __future__ import annotations

import base64
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from .chunking import Chunk
from .errors import (
    PayloadTooLarge,
    ProviderError,
    Timeout,
    UnboundPlaceholder,
    UploadFailed,
)
from .video import VideoArtifact

logger = logging.getLogger(__name__)

TEMPLATE_IDS = ("chunk_describe", "text_journal", "video_journal")

# Placeholders look like {INTERVAL}; the literal JSON braces in the journal
# templates never form an identifier, so they are left untouched.
_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

DEFAULT_RETRIES = 3
DEFAULT_BACKOFF_S = 0.5
DEFAULT_IMAGE_TIMEOUT_S = 120.0
DEFAULT_VIDEO_TIMEOUT_S = 600.0


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    top_p: float = 1.0


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str

    def placeholders(self) -> set[str]:
        return {m.group(1) for m in _PLACEHOLDER_RE.finditer(self.body)}

    def render(self, bindings: Mapping[str, object]) -> str:
        def substitute(match: re.Match[str]) -> str:
            name = match.group(1)
            if name not in bindings:
                raise UnboundPlaceholder(name)
            return str(bindings[name])

        return _PLACEHOLDER_RE.sub(substitute, self.body)


def load_template(template_id: str) -> PromptTemplate:
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"unknown template id {template_id!r}")
    body = (
        resources.files("autojournal").joinpath(f"prompts/{template_id}.txt").read_text("utf-8")
    )
    return PromptTemplate(id=template_id, body=body)


def render_prompt(template: PromptTemplate, bindings: Mapping[str, object]) -> str:
    """Substitute placeholder bindings verbatim; raise UnboundPlaceholder if short."""
    return template.render(bindings)


@dataclass(frozen=True)
class Attachment:
    kind: str  # "image" | "video"
    path: str


@dataclass(frozen=True)
class ModelRequest:
    prompt: str
    attachments: tuple[Attachment, ...]
    params: DecodingParams
    provider: str
    tags: Mapping[str, str] = field(default_factory=dict)  # routing metadata, e.g. mock keys

    def __post_init__(self) -> None:
        kinds = {a.kind for a in self.attachments}
        if not kinds <= {"image", "video"}:
            raise ValueError(f"unknown attachment kinds: {kinds}")
        if "video" in kinds and (len(self.attachments) != 1):
            raise ValueError("a request carries either images or exactly one video")


@dataclass(frozen=True)
class ModelResponse:
    text: str
    latency_ms: float
    provider_meta: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ChunkDescription:
    """One chunk's activity description with its covered time window."""

    start_time: int  # epoch ms
    end_time: int
    text: str


class Provider(Protocol):
    name: str
    max_payload_bytes: int | None

    def send(self, request: ModelRequest, timeout_s: float) -> ModelResponse: ...


class HttpProvider:
    """Generic JSON-over-HTTP provider; auth token read from MODEL_API_KEY."""

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = "MODEL_API_KEY",
        max_payload_bytes: int | None = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.max_payload_bytes = max_payload_bytes
        self.name = "http"

    def send(self, request: ModelRequest, timeout_s: float) -> ModelResponse:
        import os

        import requests

        attachments = []
        for att in request.attachments:
            try:
                data = Path(att.path).read_bytes()
            except OSError as exc:
                raise UploadFailed(f"cannot read attachment {att.path}: {exc}") from exc
            attachments.append(
                {
                    "kind": att.kind,
                    "name": Path(att.path).name,
                    "data_b64": base64.b64encode(data).decode("ascii"),
                }
            )
        headers = {}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "prompt": request.prompt,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "attachments": attachments,
        }
        start = time.monotonic()
        try:
            resp = requests.post(self.endpoint, json=body, headers=headers, timeout=timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"no response within {timeout_s}s") from exc
        except requests.RequestException as exc:
            raise ProviderError(0, str(exc)) from exc
        latency_ms = (time.monotonic() - start) * 1000.0
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text[:500])
        text = resp.json().get("text")
        if not isinstance(text, str):
            raise ProviderError(200, "response body carries no text field")
        return ModelResponse(text=text, latency_ms=latency_ms, provider_meta={"status": "200"})


class MockProvider:
    """Scripted provider for offline runs and tests.

    The script is either an in-order sequence of responses, a mapping from a
    request's ``mock_key`` tag to response text, or a directory containing
    ``<mock_key>.txt`` files. Every request is captured for inspection.
    """

    def __init__(
        self,
        script: Sequence[str] | Mapping[str, str] | str | Path,
        max_payload_bytes: int | None = None,
    ):
        self.name = "mock"
        self.max_payload_bytes = max_payload_bytes
        self.captured: list[ModelRequest] = []
        self._lock = threading.Lock()
        self._queue: list[str] | None = None
        self._mapping: Mapping[str, str] | None = None
        self._script_dir: Path | None = None
        if isinstance(script, (str, Path)):
            self._script_dir = Path(script)
        elif isinstance(script, Mapping):
            self._mapping = script
        else:
            self._queue = list(script)

    def send(self, request: ModelRequest, timeout_s: float) -> ModelResponse:
        with self._lock:
            self.captured.append(request)
            if self._queue is not None:
                if not self._queue:
                    raise ProviderError(404, "mock script exhausted")
                text = self._queue.pop(0)
                return ModelResponse(text=text, latency_ms=0.0)
        key = request.tags.get("mock_key")
        if key is None:
            raise ProviderError(400, "request carries no mock_key tag")
        if self._mapping is not None:
            if key not in self._mapping:
                raise ProviderError(404, f"no scripted response for {key}")
            return ModelResponse(text=self._mapping[key], latency_ms=0.0)
        assert self._script_dir is not None
        path = self._script_dir / f"{key}.txt"
        if not path.is_file():
            raise ProviderError(404, f"no scripted response file {path}")
        return ModelResponse(text=path.read_text("utf-8"), latency_ms=0.0)


class RateLimiter:
    """Token bucket over requests per minute; thread-safe, no-op when rpm is None."""

    def __init__(
        self,
        rpm: float | None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.rpm = rpm
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        if rpm:
            self._capacity = float(rpm)
            self._tokens = float(rpm)
            self._last = clock()

    def acquire(self) -> None:
        if not self.rpm:
            return
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(
                    self._capacity, self._tokens + (now - self._last) * self.rpm / 60.0
                )
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) * 60.0 / self.rpm
            self._sleep(wait)


def format_clock_time(epoch_ms: int, utc_offset_minutes: int = 0) -> str:
    """Render an epoch-millisecond stamp as HH:MM:SS for the prompts."""
    dt = datetime.fromtimestamp(epoch_ms / 1000.0, tz=timezone.utc)
    if utc_offset_minutes:
        from datetime import timedelta

        dt = dt + timedelta(minutes=utc_offset_minutes)
    return dt.strftime("%H:%M:%S")


def _format_interval(interval_s: float) -> str:
    return str(int(interval_s)) if float(interval_s).is_integer() else str(interval_s)


class ModelGateway:
    """Sends chunk-description and journal-summarization requests with retries."""

    def __init__(
        self,
        provider: Provider,
        *,
        params: DecodingParams | None = None,
        interval_s: float = 3.0,
        retries: int = DEFAULT_RETRIES,
        backoff_s: float = DEFAULT_BACKOFF_S,
        image_timeout_s: float = DEFAULT_IMAGE_TIMEOUT_S,
        video_timeout_s: float = DEFAULT_VIDEO_TIMEOUT_S,
        rpm: float | None = None,
        time_formatter: Callable[[int], str] = format_clock_time,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.params = params or DecodingParams()
        self.interval_s = interval_s
        self.retries = retries
        self.backoff_s = backoff_s
        self.image_timeout_s = image_timeout_s
        self.video_timeout_s = video_timeout_s
        self.time_formatter = time_formatter
        self._limiter = RateLimiter(rpm, sleep=sleep)
        self._sleep = sleep
        self._templates = {tid: load_template(tid) for tid in TEMPLATE_IDS}

    def _send(self, request: ModelRequest, timeout_s: float) -> ModelResponse:
        last: Exception | None = None
        for attempt in range(self.retries):
            self._limiter.acquire()
            try:
                return self.provider.send(request, timeout_s)
            except (Timeout, ProviderError) as exc:
                if isinstance(exc, ProviderError) and not exc.retryable:
                    raise
                last = exc
                if attempt + 1 < self.retries:
                    wait = self.backoff_s * (2**attempt)
                    logger.warning(
                        "transient provider error (attempt %d/%d), retrying in %.1fs: %s",
                        attempt + 1, self.retries, wait, exc,
                    )
                    self._sleep(wait)
        assert last is not None
        raise last

    def describe_chunk(
        self,
        chunk: Chunk,
        params: DecodingParams | None = None,
        tags: Mapping[str, str] | None = None,
    ) -> str:
        """Ask the model for an activity description of one chunk's screenshots."""
        if (
            self.provider.max_payload_bytes is not None
            and chunk.payload_bytes > self.provider.max_payload_bytes
        ):
            raise PayloadTooLarge(
                f"chunk {chunk.ordinal} is {chunk.payload_bytes} bytes, over the "
                f"provider limit of {self.provider.max_payload_bytes}"
            )
        prompt = self._templates["chunk_describe"].render(
            {
                "INTERVAL": _format_interval(self.interval_s),
                "start_time": self.time_formatter(chunk.start_time),
                "end_time": self.time_formatter(chunk.end_time),
            }
        )
        request = ModelRequest(
            prompt=prompt,
            attachments=tuple(Attachment("image", f.source_path) for f in chunk.frames),
            params=params or self.params,
            provider=self.provider.name,
            tags=dict(tags or {}),
        )
        return self._send(request, self.image_timeout_s).text

    def summarize_text_journal(
        self,
        descriptions: Sequence[ChunkDescription],
        params: DecodingParams | None = None,
        tags: Mapping[str, str] | None = None,
    ) -> str:
        """Summarize time-ordered chunk descriptions into raw journal text."""
        if not descriptions:
            raise ValueError("at least one chunk description is required")
        blocks = [
            f"[{self.time_formatter(d.start_time)} – {self.time_formatter(d.end_time)}]\n{d.text}"
            for d in descriptions
        ]
        prompt = self._templates["text_journal"].render({}) + "\n\n" + "\n\n".join(blocks)
        request = ModelRequest(
            prompt=prompt,
            attachments=(),
            params=params or self.params,
            provider=self.provider.name,
            tags=dict(tags or {}),
        )
        return self._send(request, self.image_timeout_s).text

    def summarize_video_journal(
        self,
        video: VideoArtifact,
        params: DecodingParams | None = None,
        tags: Mapping[str, str] | None = None,
    ) -> str:
        """Attach the day's video and ask for the journal directly."""
        if not Path(video.path).is_file():
            raise UploadFailed(f"video file missing: {video.path}")
        prompt = self._templates["video_journal"].render({})
        request = ModelRequest(
            prompt=prompt,
            attachments=(Attachment("video", str(video.path)),),
            params=params or self.params,
            provider=self.provider.name,
            tags=dict(tags or {}),
        )
        return self._send(request, self.video_timeout_s).text
