"""Exception types shared across the pipeline."""

from __future__ import annotations


class AutojournalError(Exception):
    """Base class for every error raised by this package."""


# --- ingest ---------------------------------------------------------------


class DirectoryUnreadable(AutojournalError):
    pass


class NoValidFrames(AutojournalError):
    pass


class TimestampUnparseable(AutojournalError):
    def __init__(self, file: str):
        super().__init__(f"no capture timestamp in filename: {file}")
        self.file = file


class EmptyStream(AutojournalError):
    pass


# --- chunking -------------------------------------------------------------


class FrameExceedsLimit(AutojournalError):
    def __init__(self, source_path: str, size: int, max_bytes: int):
        super().__init__(
            f"frame {source_path} is {size} bytes, over the {max_bytes}-byte chunk limit"
        )
        self.source_path = source_path
        self.size = size
        self.max_bytes = max_bytes


# --- video ----------------------------------------------------------------


class EncoderUnavailable(AutojournalError):
    pass


class WriteFailed(AutojournalError):
    def __init__(self, path: str, reason: str = ""):
        msg = f"failed to write {path}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)
        self.path = path


# --- model gateway ----------------------------------------------------------


class ProviderError(AutojournalError):
    def __init__(self, status: int, message: str):
        super().__init__(f"provider error {status}: {message}")
        self.status = status
        self.message = message

    @property
    def retryable(self) -> bool:
        return self.status in (408, 429, 500, 502, 503, 504)


class Timeout(ProviderError):
    def __init__(self, message: str = "request timed out"):
        super().__init__(408, message)


class PayloadTooLarge(AutojournalError):
    pass


class UploadFailed(AutojournalError):
    pass


class UnboundPlaceholder(AutojournalError):
    def __init__(self, name: str):
        super().__init__(f"template placeholder {{{name}}} has no binding")
        self.name = name


# --- journal model ----------------------------------------------------------


class NoJsonFound(AutojournalError):
    pass


class SchemaViolation(AutojournalError):
    pass


class TooManyEntries(SchemaViolation):
    def __init__(self, n: int, limit: int):
        super().__init__(f"journal has {n} entries, over the limit of {limit}")
        self.n = n
        self.limit = limit


class FileUnreadable(AutojournalError):
    pass


# --- evaluator --------------------------------------------------------------


class EmptyJournal(AutojournalError):
    def __init__(self, which: str):
        super().__init__(f"{which} journal has no entries")
        self.which = which


class DimensionMismatch(AutojournalError):
    pass


class AssignmentMismatch(AutojournalError):
    pass


# --- pipeline / reporting ---------------------------------------------------


class ConfigError(AutojournalError):
    pass


class MissingGroundTruth(AutojournalError):
    def __init__(self, participant: str, date: str):
        super().__init__(f"no ground-truth journal for {participant} {date}")
        self.participant = participant
        self.date = date


class MissingPrediction(AutojournalError):
    def __init__(self, participant: str, date: str, stream: str):
        super().__init__(f"no generated {stream} journal for {participant} {date}")
        self.participant = participant
        self.date = date
        self.stream = stream


class MalformedReport(AutojournalError):
    pass
