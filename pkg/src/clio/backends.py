"""Backend seam: every external service sits behind one of these interfaces.

Scripted implementations live here so sessions and tests can run fully
offline; cassette-backed replay implementations are in ``clio.tools.replay``.
Live transports are constructed only when the matching credential is present
in the environment (never from flags or config files).
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from clio.clock import LogicalClock, SystemClock
from clio.errors import AgentUnavailable, BackendError, RateLimited

logger = logging.getLogger(__name__)

#: Backoff delays (seconds) between retries on transport errors.
BACKOFF_SCHEDULE = (1.0, 2.0, 4.0)


def with_retries(fn, retries=3, sleep=time.sleep, retryable=(BackendError,)):
    """Call ``fn`` with exponential backoff on transport errors.

    Performs one initial attempt plus up to ``retries`` retries, sleeping
    1s, 2s, 4s between attempts. Non-retryable errors propagate immediately.
    """
    attempt = 0
    while True:
        try:
            return fn()
        except retryable as exc:
            if attempt >= retries:
                raise
            delay = BACKOFF_SCHEDULE[min(attempt, len(BACKOFF_SCHEDULE) - 1)]
            logger.debug("retryable backend error (%s); retrying in %.0fs", exc, delay)
            sleep(delay)
            attempt += 1


class RateLimiter:
    """Process-global per-backend minimum-interval limiter."""

    _registry: dict = {}
    _registry_lock = threading.Lock()

    def __init__(self, min_interval: float):
        self.min_interval = min_interval
        self._last = 0.0
        self._lock = threading.Lock()

    @classmethod
    def get(cls, name: str, min_interval: float) -> "RateLimiter":
        with cls._registry_lock:
            if name not in cls._registry:
                cls._registry[name] = cls(min_interval)
            return cls._registry[name]

    def wait(self, sleep=time.sleep, monotonic=time.monotonic):
        with self._lock:
            now = monotonic()
            remaining = self._last + self.min_interval - now
            if remaining > 0:
                sleep(remaining)
            self._last = monotonic()


@dataclass
class FetchResponse:
    """A raw fetch result prior to content extraction."""

    url: str
    status: int = 200
    content_type: str = "text/html"
    body: bytes = b""
    final_url: str = ""

    def __post_init__(self):
        if not self.final_url:
            self.final_url = self.url

    def text(self, encoding="utf-8") -> str:
        return self.body.decode(encoding, errors="replace")


# --------------------------------------------------------------------------
# Interfaces. Plain classes, duck-typed; scripted/replay/live all satisfy them.
# --------------------------------------------------------------------------

class ModelBackend:
    """Reasoning-model client: one prompt in, one reply out."""

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        raise NotImplementedError


class SearchBackend:
    def search(self, query: str) -> list[dict]:
        """Ranked results as {title, url, snippet} dicts."""
        raise NotImplementedError

    #: Longest query the backend accepts; longer queries are truncated upstream.
    query_limit = 2048


class FetchBackend:
    def fetch(self, url: str) -> FetchResponse:
        raise NotImplementedError


class ArchiveBackend:
    def snapshots(self, url: str) -> list[tuple[str, str]]:
        """All (iso_date, html) snapshots for a URL, any order."""
        raise NotImplementedError


class ScholarBackend:
    def search(self, query: str, limit: int = 10) -> list[dict]:
        """Relevance-ranked hits: {title, authors, venue, year, url,
        citation_count, snippet}."""
        raise NotImplementedError


class BookIndexBackend:
    def search(self, phrase: str, domain: str = "") -> list[dict]:
        """Snippet hits: {title, url, snippet, page_number?}."""
        raise NotImplementedError


class PublisherBackend:
    def structured_search(self, fields: dict) -> list[dict]:
        raise NotImplementedError


class ManuscriptOcrBackend:
    """Job-based engine for western manuscripts: submit a public image URL,
    poll until a PAGE-XML transcription is ready."""

    def submit(self, image_url: str) -> str:
        raise NotImplementedError

    def poll(self, job_id: str) -> Optional[str]:
        """PAGE-XML string when ready, None while pending."""
        raise NotImplementedError


class AsianOcrBackend:
    def transcribe(self, image_bytes: bytes) -> list[str]:
        raise NotImplementedError


class ImageHostBackend:
    def upload(self, path: str) -> str:
        """Publish a local file, returning its public URL."""
        raise NotImplementedError


class ReverseImageBackend:
    def search(self, image_url: str) -> list[dict]:
        """Candidate matches: {match_url, page_title, description,
        image_path?}. ``image_path`` points at a local copy of the candidate
        image when similarity scoring is enabled."""
        raise NotImplementedError


class AsrBackend:
    def transcribe(self, data: bytes) -> str:
        raise NotImplementedError


class TranslationBackend:
    def translate(self, text: str, target_language: str) -> dict:
        """{detected_source, translation}."""
        raise NotImplementedError


class VideoSourceBackend:
    def fetch(self, url: str, dest_dir: str) -> dict:
        """Download the video, returning {path, title}."""
        raise NotImplementedError


# --------------------------------------------------------------------------
# Scripted implementations
# --------------------------------------------------------------------------

class ScriptedModelBackend(ModelBackend):
    """Replays a fixed list of replies; records every prompt it sees."""

    def __init__(self, replies, repeat_last=False):
        self.replies = list(replies)
        self.repeat_last = repeat_last
        self.calls: list[str] = []
        self._cursor = 0

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        self.calls.append(prompt)
        if self._cursor >= len(self.replies):
            if self.repeat_last and self.replies:
                return self.replies[-1]
            raise BackendError("scripted model backend exhausted its replies")
        reply = self.replies[self._cursor]
        self._cursor += 1
        return reply

    def reset(self):
        self._cursor = 0


class StaticSearchBackend(SearchBackend):
    """Query -> canned results; exact-match lookup with optional default."""

    def __init__(self, results_by_query=None, default=None):
        self.results_by_query = dict(results_by_query or {})
        self.default = list(default or [])
        self.calls: list[str] = []

    def search(self, query: str) -> list[dict]:
        self.calls.append(query)
        if query in self.results_by_query:
            return [dict(r) for r in self.results_by_query[query]]
        return [dict(r) for r in self.default]


class StaticFetchBackend(FetchBackend):
    """URL -> canned FetchResponse."""

    def __init__(self, pages=None):
        # pages: url -> FetchResponse | str (treated as 200 text/html)
        self.pages = {}
        for url, value in (pages or {}).items():
            self.add(url, value)
        self.calls: list[str] = []

    def add(self, url, value):
        if isinstance(value, FetchResponse):
            self.pages[url] = value
        else:
            body = value.encode("utf-8") if isinstance(value, str) else value
            self.pages[url] = FetchResponse(url=url, body=body)

    def fetch(self, url: str) -> FetchResponse:
        self.calls.append(url)
        if url not in self.pages:
            return FetchResponse(url=url, status=404, body=b"not found")
        return self.pages[url]


class StaticArchiveBackend(ArchiveBackend):
    def __init__(self, snapshots_by_url=None):
        self.snapshots_by_url = dict(snapshots_by_url or {})
        self.calls: list[str] = []

    def snapshots(self, url: str) -> list[tuple[str, str]]:
        self.calls.append(url)
        return list(self.snapshots_by_url.get(url, []))


class StaticScholarBackend(ScholarBackend):
    def __init__(self, hits=None, hits_by_query=None):
        self.hits = list(hits or [])
        self.hits_by_query = dict(hits_by_query or {})
        self.calls: list[tuple[str, int]] = []

    def search(self, query: str, limit: int = 10) -> list[dict]:
        self.calls.append((query, limit))
        hits = self.hits_by_query.get(query, self.hits)
        return [dict(h) for h in hits[:limit]]


class StaticBookIndexBackend(BookIndexBackend):
    def __init__(self, hits_by_phrase=None, robots_blocked=False):
        self.hits_by_phrase = dict(hits_by_phrase or {})
        self.robots_blocked = robots_blocked
        self.calls: list[tuple[str, str]] = []

    def search(self, phrase: str, domain: str = "") -> list[dict]:
        self.calls.append((phrase, domain))
        if self.robots_blocked:
            from clio.errors import RobotsDisallowed

            raise RobotsDisallowed("book index crawl disallowed by robots.txt")
        return [dict(h) for h in self.hits_by_phrase.get(phrase, [])]


class StaticPublisherBackend(PublisherBackend):
    def __init__(self, records=None, quota_exceeded=False):
        self.records = list(records or [])
        self.quota_exceeded = quota_exceeded
        self.calls: list[dict] = []

    def structured_search(self, fields: dict) -> list[dict]:
        self.calls.append(dict(fields))
        if self.quota_exceeded:
            from clio.errors import QuotaExceeded

            raise QuotaExceeded("publisher API quota exceeded")
        return [dict(r) for r in self.records]


class ScriptedManuscriptOcrBackend(ManuscriptOcrBackend):
    """Returns a fixed PAGE-XML document after ``pending_polls`` poll cycles."""

    def __init__(self, page_xml: Optional[str], pending_polls=0):
        self.page_xml = page_xml
        self.pending_polls = pending_polls
        self.submit_calls: list[str] = []
        self.poll_calls = 0

    def submit(self, image_url: str) -> str:
        self.submit_calls.append(image_url)
        return "job-1"

    def poll(self, job_id: str) -> Optional[str]:
        self.poll_calls += 1
        if self.poll_calls <= self.pending_polls:
            return None
        return self.page_xml


class ScriptedAsianOcrBackend(AsianOcrBackend):
    def __init__(self, lines=None):
        self.lines = list(lines or [])
        self.calls = 0

    def transcribe(self, image_bytes: bytes) -> list[str]:
        self.calls += 1
        return list(self.lines)


class StaticImageHostBackend(ImageHostBackend):
    def __init__(self, base_url="https://img.example.org"):
        self.base_url = base_url
        self.uploads: list[str] = []

    def upload(self, path: str) -> str:
        self.uploads.append(path)
        return f"{self.base_url}/{os.path.basename(path)}"


class StaticReverseImageBackend(ReverseImageBackend):
    def __init__(self, matches=None):
        self.matches = list(matches or [])
        self.calls: list[str] = []

    def search(self, image_url: str) -> list[dict]:
        self.calls.append(image_url)
        return [dict(m) for m in self.matches]


class ScriptedAsrBackend(AsrBackend):
    """Replies with the next transcript in sequence, or maps byte-size."""

    def __init__(self, transcripts=None):
        self.transcripts = list(transcripts or [])
        self.calls: list[int] = []
        self._cursor = 0

    def transcribe(self, data: bytes) -> str:
        self.calls.append(len(data))
        if self._cursor < len(self.transcripts):
            text = self.transcripts[self._cursor]
            self._cursor += 1
            return text
        return f"[{len(data)} bytes]"


class EchoTranslationBackend(TranslationBackend):
    """Returns fixed translations keyed by input text, else echoes."""

    def __init__(self, pairs=None, detected="unknown"):
        self.pairs = dict(pairs or {})
        self.detected = detected
        self.calls: list[tuple[str, str]] = []

    def translate(self, text: str, target_language: str) -> dict:
        self.calls.append((text, target_language))
        translation = self.pairs.get(text, text)
        return {"detected_source": self.detected, "translation": translation}


class LocalVideoBackend(VideoSourceBackend):
    """Maps URLs to local files: the 'download' is a copy."""

    def __init__(self, files_by_url=None):
        self.files_by_url = dict(files_by_url or {})
        self.calls: list[str] = []

    def fetch(self, url: str, dest_dir: str) -> dict:
        import shutil

        self.calls.append(url)
        if url not in self.files_by_url:
            from clio.errors import DownloadFailed

            raise DownloadFailed(f"no local video mapped for {url}")
        src = self.files_by_url[url]
        os.makedirs(dest_dir, exist_ok=True)
        dest = os.path.join(dest_dir, os.path.basename(src))
        shutil.copyfile(src, dest)
        return {"path": dest, "title": os.path.splitext(os.path.basename(src))[0]}


# --------------------------------------------------------------------------
# Live transports (credential-gated; replay mode is the default everywhere)
# --------------------------------------------------------------------------

class LiveModelBackend(ModelBackend):
    """OpenAI-compatible chat-completions client.

    Reads its key from the named environment variable at construction and
    refuses to build without it.
    """

    def __init__(self, model: str, key_env: str = "LLM_API_KEY",
                 base_url: Optional[str] = None, timeout: float = 120.0):
        key = os.environ.get(key_env, "")
        if not key:
            raise AgentUnavailable(f"missing credential {key_env} for live model backend")
        self.model = model
        self._key = key
        self.base_url = base_url or os.environ.get("LLM_API_BASE", "https://api.openai.com/v1")
        self.timeout = timeout

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        import requests

        try:
            resp = requests.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self._key}"},
                json={
                    "model": self.model,
                    "temperature": temperature,
                    "messages": [{"role": "user", "content": prompt}],
                },
                timeout=self.timeout,
            )
        except Exception as exc:  # transport failure, DNS, timeout
            raise BackendError(f"model backend unreachable: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimited("model backend rate limited")
        if resp.status_code != 200:
            raise BackendError(f"model backend returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except Exception as exc:
            raise BackendError(f"malformed model backend reply: {exc}") from exc


class LiveFetchBackend(FetchBackend):
    def __init__(self, user_agent="clio-research/0.1", timeout: float = 30.0):
        self.user_agent = user_agent
        self.timeout = timeout

    def fetch(self, url: str) -> FetchResponse:
        import requests

        try:
            resp = requests.get(url, headers={"User-Agent": self.user_agent},
                                timeout=self.timeout)
        except Exception as exc:
            raise BackendError(f"fetch failed for {url}: {exc}") from exc
        return FetchResponse(
            url=url,
            status=resp.status_code,
            content_type=resp.headers.get("Content-Type", "application/octet-stream"),
            body=resp.content,
            final_url=str(resp.url),
        )


class _CredentialGated:
    """Placeholder live backend: v1 ships replay transports for these.

    Construction fails fast without the credential; with it, calls still
    raise AgentUnavailable naming the replay path, because the real browser
    or vendor integration is stubbed behind this seam in v1.
    """

    def __init__(self, key_env: str, name: str):
        if not os.environ.get(key_env, ""):
            raise AgentUnavailable(f"missing credential {key_env} for live {name} backend")
        self.name = name

    def _unavailable(self):
        raise AgentUnavailable(
            f"live {self.name} transport is stubbed in v1; run with --mode replay"
        )


class LiveSearchBackend(_CredentialGated, SearchBackend):
    def __init__(self):
        super().__init__("SEARCH_API_KEY", "search")

    def search(self, query: str) -> list[dict]:
        self._unavailable()


class LivePublisherBackend(_CredentialGated, PublisherBackend):
    def __init__(self):
        super().__init__("PUBLISHER_API_KEY", "publisher")

    def structured_search(self, fields: dict) -> list[dict]:
        self._unavailable()


class LiveManuscriptOcrBackend(_CredentialGated, ManuscriptOcrBackend):
    def __init__(self):
        super().__init__("OCR_API_KEY", "manuscript OCR")

    def submit(self, image_url: str) -> str:
        self._unavailable()

    def poll(self, job_id: str):
        self._unavailable()


class LiveAsrBackend(_CredentialGated, AsrBackend):
    def __init__(self):
        super().__init__("ASR_API_KEY", "speech transcription")

    def transcribe(self, data: bytes) -> str:
        self._unavailable()


class LiveImageHostBackend(_CredentialGated, ImageHostBackend):
    def __init__(self):
        super().__init__("IMAGE_HOST_KEY", "image host")

    def upload(self, path: str) -> str:
        self._unavailable()


# --------------------------------------------------------------------------
# Bundle
# --------------------------------------------------------------------------

@dataclass
class Backends:
    """Everything a session may talk to, plus time and sleep seams."""

    model: Optional[ModelBackend] = None
    judge: Optional[ModelBackend] = None
    search: Optional[SearchBackend] = None
    fetch: Optional[FetchBackend] = None
    archive: Optional[ArchiveBackend] = None
    scholar: Optional[ScholarBackend] = None
    book_index: Optional[BookIndexBackend] = None
    publisher: Optional[PublisherBackend] = None
    ocr_western: Optional[ManuscriptOcrBackend] = None
    ocr_asian: Optional[AsianOcrBackend] = None
    image_host: Optional[ImageHostBackend] = None
    image_match: Optional[ReverseImageBackend] = None
    asr: Optional[AsrBackend] = None
    translator: Optional[TranslationBackend] = None
    video: Optional[VideoSourceBackend] = None
    sleep: Callable[[float], None] = time.sleep
    clock: object = field(default_factory=SystemClock)

    def require(self, name: str):
        backend = getattr(self, name, None)
        if backend is None:
            raise AgentUnavailable(f"backend '{name}' is not configured")
        return backend


def offline_backends(**overrides) -> Backends:
    """A fully-offline bundle with inert defaults, for tests and fixtures."""
    base = Backends(
        model=ScriptedModelBackend([]),
        judge=ScriptedModelBackend([]),
        search=StaticSearchBackend(),
        fetch=StaticFetchBackend(),
        archive=StaticArchiveBackend(),
        scholar=StaticScholarBackend(),
        book_index=StaticBookIndexBackend(),
        publisher=StaticPublisherBackend(),
        ocr_western=ScriptedManuscriptOcrBackend(page_xml=None),
        ocr_asian=ScriptedAsianOcrBackend(),
        image_host=StaticImageHostBackend(),
        image_match=StaticReverseImageBackend(),
        asr=ScriptedAsrBackend(),
        translator=EchoTranslationBackend(),
        video=LocalVideoBackend(),
        sleep=lambda _seconds: None,
        clock=LogicalClock(),
    )
    for key, value in overrides.items():
        setattr(base, key, value)
    return base
