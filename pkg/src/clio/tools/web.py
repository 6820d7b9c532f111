"""Web search, page visits, paging/find navigation, and archive lookup."""

from __future__ import annotations

import datetime as _dt
import hashlib
import html.parser
import json
import logging
import os
import urllib.parse
from dataclasses import dataclass, field
from typing import Optional

from clio.backends import ArchiveBackend, FetchBackend, SearchBackend
from clio.clock import SystemClock
from clio.errors import HttpError, NonHtmlRedirect, NoSnapshot, RobotsDisallowed

log = logging.getLogger(__name__)

# Characters shown per viewport when paging through a long page.
VIEWPORT_CHARS = 2000

_SKIPPED_ELEMENTS = {"script", "style", "noscript", "template", "svg",
                     "nav", "header", "footer", "aside", "form"}
_BLOCK_ELEMENTS = {"p", "div", "section", "article", "main", "li", "tr",
                   "table", "ul", "ol", "blockquote", "pre", "br", "hr",
                   "h1", "h2", "h3", "h4", "h5", "h6", "dd", "dt", "figcaption"}


class _TextExtractor(html.parser.HTMLParser):
    """Pulls readable text out of HTML, preferring article/main regions."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.title_parts: list[str] = []
        self.body_parts: list[str] = []
        self.content_parts: list[str] = []
        self._skip_depth = 0
        self._in_title = False
        self._content_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIPPED_ELEMENTS:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        elif tag in ("article", "main"):
            self._content_depth += 1
        if tag in _BLOCK_ELEMENTS:
            self._append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIPPED_ELEMENTS and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "title":
            self._in_title = False
        elif tag in ("article", "main") and self._content_depth:
            self._content_depth -= 1
        if tag in _BLOCK_ELEMENTS:
            self._append("\n")

    def _append(self, text: str):
        self.body_parts.append(text)
        if self._content_depth:
            self.content_parts.append(text)

    def handle_data(self, data):
        if self._in_title:
            self.title_parts.append(data)
            return
        if self._skip_depth:
            return
        self._append(data)


def _normalize_blocks(parts: list[str]) -> str:
    text = "".join(parts)
    lines = [" ".join(line.split()) for line in text.split("\n")]
    out: list[str] = []
    for line in lines:
        if line:
            out.append(line)
        elif out and out[-1]:
            out.append("")
    while out and not out[-1]:
        out.pop()
    return "\n".join(out)


def extract_text(html_body: str) -> tuple[str, str]:
    """Return (title, readable_text) for an HTML document.

    When the page declares an article or main region only that region's
    text is kept; otherwise the whole body is used with chrome elements
    (nav, header, footer, scripts) dropped.
    """
    extractor = _TextExtractor()
    extractor.feed(html_body)
    extractor.close()
    title = " ".join("".join(extractor.title_parts).split())
    content = _normalize_blocks(extractor.content_parts)
    body = _normalize_blocks(extractor.body_parts)
    return title, content if content else body


@dataclass
class PageContent:
    """One visited page plus viewport state for paging and in-page find.

    The viewport is a fixed-size character window over the extracted text;
    page_down/page_up move it, find/find_next position it at successive
    occurrences of a term.
    """

    url: str
    title: str
    text: str
    fetched_at: str
    snapshot_date: Optional[str] = None
    note: str = ""
    viewport_chars: int = VIEWPORT_CHARS
    _offset: int = field(default=0, repr=False)
    _find_term: Optional[str] = field(default=None, repr=False)
    _find_pos: int = field(default=-1, repr=False)

    def viewport(self) -> str:
        return self.text[self._offset:self._offset + self.viewport_chars]

    def page_count(self) -> int:
        if not self.text:
            return 1
        return (len(self.text) + self.viewport_chars - 1) // self.viewport_chars

    def current_page(self) -> int:
        return self._offset // self.viewport_chars + 1

    def page_down(self) -> str:
        nxt = self._offset + self.viewport_chars
        if nxt < len(self.text):
            self._offset = nxt
        return self.viewport()

    def page_up(self) -> str:
        self._offset = max(0, self._offset - self.viewport_chars)
        return self.viewport()

    def find(self, term: str) -> Optional[int]:
        """Jump to the first occurrence of term; None when absent."""
        self._find_term = term
        self._find_pos = self.text.find(term)
        if self._find_pos == -1:
            return None
        self._offset = (self._find_pos // self.viewport_chars) * self.viewport_chars
        return self._find_pos

    def find_next(self) -> Optional[int]:
        """Advance to the next occurrence of the last find term."""
        if self._find_term is None or self._find_pos == -1:
            return None
        pos = self.text.find(self._find_term, self._find_pos + 1)
        if pos == -1:
            return None
        self._find_pos = pos
        self._offset = (pos // self.viewport_chars) * self.viewport_chars
        return pos


class FetchCache:
    """Session cache of visited pages, with an optional disk layer.

    The in-memory map guarantees one backend fetch per URL per session.
    The disk layer (when given a directory) is keyed by URL plus calendar
    day, so reruns on the same day reuse stored bodies.
    """

    def __init__(self, cache_dir: Optional[str] = None, today: Optional[str] = None):
        self.pages: dict[str, PageContent] = {}
        self.cache_dir = str(cache_dir) if cache_dir else None
        self.today = today or _dt.date.today().isoformat()
        self.hits = 0
        self.misses = 0

    def get(self, url: str) -> Optional[PageContent]:
        page = self.pages.get(url)
        if page is not None:
            self.hits += 1
        return page

    def put(self, url: str, page: PageContent):
        self.misses += 1
        self.pages[url] = page

    def _disk_path(self, url: str) -> Optional[str]:
        if not self.cache_dir:
            return None
        digest = hashlib.sha256(f"{url}|{self.today}".encode("utf-8")).hexdigest()[:24]
        return os.path.join(self.cache_dir, f"page-{digest}.json")

    def disk_get(self, url: str) -> Optional[dict]:
        path = self._disk_path(url)
        if path and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        return None

    def disk_put(self, url: str, payload: dict):
        path = self._disk_path(url)
        if path:
            os.makedirs(self.cache_dir, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh)


def _require_absolute_http(url: str):
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValueError(f"expected an absolute http(s) URL, got {url!r}")


def web_search(query: str, backend: SearchBackend, refiner=None,
               diagnostics: Optional[list] = None) -> list[dict]:
    """Run a search query, optionally refining it once via a model.

    Results keep the backend's ranking. Overlong queries are truncated to
    the backend limit with a warning rather than rejected.
    """
    if not query or not query.strip():
        raise ValueError("search query must be non-empty")
    sent = query
    limit = getattr(backend, "query_limit", 2048)
    if len(sent) > limit:
        sent = sent[:limit]
        log.warning("search query truncated to %d characters", limit)
        if diagnostics is not None:
            diagnostics.append({"event": "query_truncated", "limit": limit})
    results = backend.search(sent)
    if not results and refiner is not None:
        refined = refiner(sent)
        if refined and refined.strip() and refined != sent:
            refined = refined[:limit]
            if diagnostics is not None:
                diagnostics.append({"event": "query_refined", "query": refined})
            results = backend.search(refined)
    return results


def visit_page(url: str, backend: FetchBackend, cache: Optional[FetchCache] = None,
               robots=None, clock=None) -> PageContent:
    """Fetch a URL and return its readable text with paging state.

    Raises RobotsDisallowed when the policy forbids the URL, HttpError on
    4xx/5xx statuses, and NonHtmlRedirect when the response is not a text
    page (the caller should route such URLs to the file tools instead).
    """
    _require_absolute_http(url)
    if robots is not None and not robots.allowed(url):
        raise RobotsDisallowed(f"robots.txt disallows {url}")
    if cache is not None:
        cached = cache.get(url)
        if cached is not None:
            return cached
    clock = clock or SystemClock()

    stored = cache.disk_get(url) if cache is not None else None
    if stored is not None:
        page = PageContent(url=url, title=stored["title"], text=stored["text"],
                           fetched_at=stored["fetched_at"])
        cache.put(url, page)
        return page

    resp = backend.fetch(url)
    if resp.status >= 400:
        raise HttpError(resp.status, url)
    ctype = resp.content_type.split(";")[0].strip().lower()
    if ctype.startswith("text/html") or ctype == "application/xhtml+xml":
        title, text = extract_text(resp.text())
    elif ctype.startswith("text/"):
        title, text = "", resp.text()
    else:
        raise NonHtmlRedirect(resp.final_url or url, ctype)
    page = PageContent(url=url, title=title, text=text, fetched_at=clock.now_iso())
    if cache is not None:
        cache.put(url, page)
        cache.disk_put(url, {"title": title, "text": text,
                             "fetched_at": page.fetched_at})
    return page


def _parse_date(value: str) -> _dt.date:
    value = value.strip()
    if len(value) == 4 and value.isdigit():
        return _dt.date(int(value), 7, 1)
    return _dt.date.fromisoformat(value[:10])


def archive_search(url: str, target_date: str, backend: ArchiveBackend,
                   clock=None) -> PageContent:
    """Return the archived snapshot closest to target_date.

    target_date accepts YYYY-MM-DD or a bare year (treated as mid-year).
    When the target predates every snapshot the earliest one is returned
    and the page note says so. No snapshots at all raises NoSnapshot.
    """
    _require_absolute_http(url)
    snapshots = backend.snapshots(url)
    if not snapshots:
        raise NoSnapshot(f"no archived snapshots for {url}")
    target = _parse_date(target_date)
    dated = sorted((_parse_date(date_str), date_str, body)
                   for date_str, body in snapshots)
    chosen = min(dated, key=lambda item: (abs((item[0] - target).days), item[0]))
    note = ""
    if target < dated[0][0]:
        note = (f"target date {target_date} predates the earliest snapshot; "
                f"returning the earliest ({dated[0][1]})")
    clock = clock or SystemClock()
    title, text = extract_text(chosen[2])
    return PageContent(url=url, title=title, text=text,
                       fetched_at=clock.now_iso(), snapshot_date=chosen[1],
                       note=note)
