"""Exception taxonomy shared across the package."""


class ClioError(Exception):
    """Base class for all library errors."""


class ConfigError(ClioError):
    """Invalid or missing configuration; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class BackendError(ClioError):
    """A backend call failed at the transport level."""


class RateLimited(BackendError):
    """Backend refused the call due to rate limiting; retryable."""


class AgentUnavailable(ClioError):
    """Agent cannot run: missing credentials in live mode, or unsupported input."""


class PlanParseError(ClioError):
    """Planner reply could not be parsed into an action after repair retries."""

    def __init__(self, message, raw_reply=None):
        super().__init__(message)
        self.raw_reply = raw_reply


# --- toolkit errors -------------------------------------------------------

class ToolError(ClioError):
    """Base class for tool-level failures."""


class UnsupportedType(ToolError):
    pass


class CorruptFile(ToolError):
    pass


class HttpError(ToolError):
    def __init__(self, status, url=""):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url


class RobotsDisallowed(ToolError):
    pass


class NonHtmlRedirect(ToolError):
    """Fetched content is not HTML; caller should route to the file handler."""

    def __init__(self, url, content_type):
        super().__init__(f"non-HTML content at {url}: {content_type}")
        self.url = url
        self.content_type = content_type


class NoSnapshot(ToolError):
    pass


class EngineTimeout(ToolError):
    pass


class PublishFailed(ToolError):
    pass


class DecodeError(ToolError):
    pass


class UnsupportedLanguage(ToolError):
    pass


class UploadFailed(ToolError):
    pass


class DownloadFailed(ToolError):
    pass


# --- literature search errors ---------------------------------------------

class AccessDenied(ToolError):
    pass


class ParseFailed(ToolError):
    pass


class QuotaExceeded(ToolError):
    pass


class AllTiersFailed(ClioError):
    pass


# --- benchmark harness errors ----------------------------------------------

class MalformedFile(ClioError):
    pass


class EmptyDataset(ClioError):
    pass


class InconsistentAttempts(ClioError):
    pass


class DanglingReference(ClioError):
    pass


class ScreeningError(ClioError):
    """Screening aborted for this question; retriable when transient."""

    def __init__(self, message, retriable=False):
        super().__init__(message)
        self.retriable = retriable
