"""Tiered scholarly retrieval: books first, then academic indexes, then
the open web, with a publisher API available as a structured side-channel.

Every search result is folded into an evidence record carrying its tier
and either a verbatim quote or a complete citation, so downstream
validation can hold the provenance line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from clio.errors import AllTiersFailed, BackendError, ToolError
from clio.evidence import TIER_ORDER, Bib, EvidenceRecord, SearchTier

DOMAIN_COOLDOWN_SECONDS = 10.0

_PAGE_LABEL_RE = re.compile(r"\bp(?:age|p)?\.?\s*(\d+)", re.IGNORECASE)


@dataclass
class LiteratureQuery:
    """One tiered search request with its step budget."""

    phrase: str
    exact_match_required: bool = False
    max_results: int = 5
    max_steps: int = 10
    replan_interval: int = 5
    # Filled in when the caller has bibliographic fields worth a
    # publisher-API side query (title/author/year/subject).
    structured_fields: Optional[dict] = None

    def validate(self):
        if not self.phrase or not self.phrase.strip():
            raise ValueError("query phrase must be non-empty")
        if self.max_results < 1:
            raise ValueError("max_results must be at least 1")
        if self.max_steps < 1 or self.replan_interval < 1:
            raise ValueError("budgets must be positive")


@dataclass
class BookSnippet:
    snippet_text: str
    source_title: str
    source_url: str
    page_number: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "snippet_text": self.snippet_text,
            "source_title": self.source_title,
            "source_url": self.source_url,
            "page_number": self.page_number,
        }


@dataclass
class PrioritySearchResult:
    """Records plus the audit trail of the tier walk."""

    records: list[EvidenceRecord] = field(default_factory=list)
    tiers_attempted: list[SearchTier] = field(default_factory=list)
    budget_exhausted: bool = False
    round_trips: int = 0


def _default_id_alloc() -> Callable[[], str]:
    counter = {"n": 0}

    def alloc() -> str:
        counter["n"] += 1
        return f"lit-{counter['n']:04d}"

    return alloc


def _now(backends) -> str:
    clock = getattr(backends, "clock", None)
    return clock.now_iso() if clock is not None else ""


def _book_records(hits, phrase, exact, alloc, stamp) -> list[EvidenceRecord]:
    records = []
    for hit in hits:
        snippet = hit.get("snippet", "")
        if exact and phrase not in snippet:
            continue
        records.append(EvidenceRecord(
            record_id=alloc(),
            quote=snippet,
            bib=Bib(title=hit.get("title", ""), pages=hit.get("page_label", "")),
            url=hit.get("url", ""),
            tier=SearchTier.BOOK_INDEX,
            retrieved_at=stamp,
        ))
    return records


def _scholar_records(hits, alloc, stamp, limit) -> list[EvidenceRecord]:
    records = []
    for hit in hits[:limit]:
        bib = Bib(
            title=hit.get("title", ""),
            authors=list(hit.get("authors", [])),
            venue=hit.get("venue", ""),
            year=hit.get("year"),
            pages=hit.get("pages", ""),
            citation_count=hit.get("citation_count"),
        )
        records.append(EvidenceRecord(
            record_id=alloc(),
            quote=hit.get("snippet", ""),
            bib=bib,
            url=hit.get("url", ""),
            tier=SearchTier.SCHOLAR_INDEX,
            retrieved_at=stamp,
        ))
    return records


def _web_records(hits, phrase, exact, alloc, stamp, limit) -> list[EvidenceRecord]:
    records = []
    for hit in hits[:limit]:
        snippet = hit.get("snippet", "")
        if exact and phrase not in snippet:
            continue
        records.append(EvidenceRecord(
            record_id=alloc(),
            quote=snippet,
            bib=Bib(title=hit.get("title", "")),
            url=hit.get("url", ""),
            tier=SearchTier.GENERAL_WEB,
            retrieved_at=stamp,
        ))
    return records


def search_priority(query: LiteratureQuery, backends,
                    tier_order: tuple = TIER_ORDER,
                    id_alloc: Optional[Callable[[], str]] = None) -> PrioritySearchResult:
    """Walk the search tiers in protocol order, one backend call per tier.

    Stops early on a verbatim hit when the query demands exact matching,
    or once max_results records are in hand. Each backend round-trip
    consumes one step of the query budget; running out marks the result
    budget_exhausted instead of raising. A tier that errors out (rate
    limit, robots, quota) is recorded and skipped. A walk that attempts
    every tier and finds nothing raises AllTiersFailed.
    """
    query.validate()
    alloc = id_alloc or _default_id_alloc()
    result = PrioritySearchResult()
    stamp = _now(backends)
    failures: list[str] = []

    def spend() -> bool:
        if result.round_trips >= query.max_steps:
            result.budget_exhausted = True
            return False
        result.round_trips += 1
        return True

    for tier in tier_order:
        if len(result.records) >= query.max_results:
            break
        if not spend():
            break
        result.tiers_attempted.append(tier)
        try:
            if tier is SearchTier.BOOK_INDEX:
                hits = backends.require("book_index").search(query.phrase)
                found = _book_records(hits, query.phrase,
                                      query.exact_match_required, alloc, stamp)
            elif tier is SearchTier.SCHOLAR_INDEX:
                hits = backends.require("scholar").search(
                    query.phrase, limit=query.max_results)
                found = _scholar_records(hits, alloc, stamp, query.max_results)
            else:
                hits = backends.require("search").search(query.phrase)
                found = _web_records(hits, query.phrase,
                                     query.exact_match_required, alloc, stamp,
                                     query.max_results)
        except (BackendError, ToolError) as exc:
            failures.append(f"{tier.value}: {exc}")
            continue
        # Sparse hits (no snippet, incomplete citation) never become
        # records: provenance completeness is guaranteed at retrieval.
        result.records.extend(
            record for record in found if record.is_provenance_complete())
        if query.exact_match_required and any(
                query.phrase in record.quote for record in found):
            break

    if query.structured_fields and not result.budget_exhausted:
        if spend():
            try:
                result.records.extend(
                    record for record in publisher_structured_search(
                        query.structured_fields, backends, id_alloc=alloc)
                    if record.is_provenance_complete())
                result.tiers_attempted.append(SearchTier.PUBLISHER_API)
            except (BackendError, ToolError) as exc:
                failures.append(f"publisher_api: {exc}")

    result.records = result.records[:query.max_results] \
        if not query.exact_match_required else result.records
    if not result.records and not result.budget_exhausted:
        detail = "; ".join(failures) if failures else "no tier produced records"
        raise AllTiersFailed(f"nothing found for {query.phrase!r} ({detail})")
    return result


def find_relevant_literature(topic: str, k: int, backends,
                             id_alloc: Optional[Callable[[], str]] = None) -> list[EvidenceRecord]:
    """Top-k scholarly works for a topic with complete citations.

    Hits keep the backend's relevance order; when explicit relevance
    scores are present, ties break by citation count descending and then
    year descending.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    hits = backends.require("scholar").search(topic, limit=max(k, 10))
    if hits and all("relevance" in hit for hit in hits):
        hits = sorted(hits, key=lambda hit: (
            -hit["relevance"],
            -(hit.get("citation_count") or 0),
            -(hit.get("year") or 0),
        ))
    alloc = id_alloc or _default_id_alloc()
    stamp = _now(backends)
    complete = [hit for hit in hits
                if hit.get("title") and hit.get("venue") and hit.get("year")]
    return _scholar_records(complete, alloc, stamp, k)


def extract_book_match(phrase: str, backends, domain: str = "") -> list[BookSnippet]:
    """Book-index snippets for a phrase, with page numbers when exposed.

    Page numbers come from an explicit field or a "p. N" label in the hit.
    Robots-disallowed domains raise through from the backend; a phrase
    with no hits returns an empty list.
    """
    if not phrase or not phrase.strip():
        raise ValueError("phrase must be non-empty")
    hits = backends.require("book_index").search(phrase, domain=domain)
    snippets = []
    for hit in hits:
        text = hit.get("snippet", "")
        if not text.strip():
            continue
        page = hit.get("page")
        if page is None:
            label = hit.get("page_label", "") or text
            match = _PAGE_LABEL_RE.search(label)
            if match:
                page = int(match.group(1))
        snippets.append(BookSnippet(
            snippet_text=text,
            source_title=hit.get("title", ""),
            source_url=hit.get("url", ""),
            page_number=page,
        ))
    return snippets


class DomainRotation:
    """Round-robin domain scheduler with a per-domain cooldown."""

    def __init__(self, domains: list[str],
                 cooldown: float = DOMAIN_COOLDOWN_SECONDS):
        if not domains:
            raise ValueError("at least one domain required")
        self.domains = list(domains)
        self.cooldown = cooldown
        self._cursor = 0
        self._last_hit: dict[str, float] = {}

    def next_domain(self, backends) -> str:
        domain = self.domains[self._cursor % len(self.domains)]
        self._cursor += 1
        clock = getattr(backends, "clock", None)
        now = clock.monotonic() if clock is not None else 0.0
        last = self._last_hit.get(domain)
        if last is not None:
            wait = self.cooldown - (now - last)
            if wait > 0:
                backends.sleep(wait)
                now += wait
        self._last_hit[domain] = now
        return domain


def crawl_book_index(phrase: str, backends, rotation: DomainRotation,
                     passes: int = 1) -> list[BookSnippet]:
    """Query the book index across rotating domains, honoring cooldowns."""
    snippets: list[BookSnippet] = []
    for _ in range(passes * len(rotation.domains)):
        domain = rotation.next_domain(backends)
        snippets.extend(extract_book_match(phrase, backends, domain=domain))
    return snippets


def fetch_and_parse_pdf(url: str, backends):
    """Download a PDF and return its parsed text with page boundaries.

    A 401/403 is retried exactly once before raising AccessDenied (some
    hosts gate the first anonymous hit only). Responses that turn out to
    be HTML raise ParseFailed naming the served content type.
    """
    from clio.errors import AccessDenied, CorruptFile, ParseFailed
    from clio.tools.documents import parse_pdf_bytes

    fetcher = backends.require("fetch")
    resp = fetcher.fetch(url)
    if resp.status in (401, 403):
        resp = fetcher.fetch(url)
        if resp.status in (401, 403):
            raise AccessDenied(f"HTTP {resp.status} for {url}")
    if resp.status >= 400:
        raise ParseFailed(f"HTTP {resp.status} for {url}")
    ctype = resp.content_type.split(";")[0].strip().lower()
    if resp.body.startswith(b"%PDF"):
        try:
            return parse_pdf_bytes(resp.body)
        except CorruptFile as exc:
            raise ParseFailed(f"unreadable PDF at {url}: {exc}") from exc
    raise ParseFailed(
        f"{url} served {ctype or 'unknown content'} instead of a PDF")


def publisher_structured_search(fields: dict, backends,
                                id_alloc: Optional[Callable[[], str]] = None) -> list[EvidenceRecord]:
    """Structured publisher-API query; metadata passes through verbatim."""
    allowed = {"title", "author", "year", "subject"}
    given = {key: value for key, value in (fields or {}).items()
             if key in allowed and value not in (None, "")}
    if not given:
        raise ValueError("at least one of title/author/year/subject required")
    hits = backends.require("publisher").structured_search(given)
    alloc = id_alloc or _default_id_alloc()
    stamp = _now(backends)
    records = []
    for hit in hits:
        bib = Bib(
            title=hit.get("title", ""),
            authors=list(hit.get("authors", [])),
            venue=hit.get("venue", ""),
            year=hit.get("year"),
            pages=hit.get("pages", ""),
            citation_count=hit.get("citation_count"),
        )
        records.append(EvidenceRecord(
            record_id=alloc(),
            quote=hit.get("snippet", ""),
            bib=bib,
            url=hit.get("url", ""),
            tier=SearchTier.PUBLISHER_API,
            retrieved_at=stamp,
        ))
    return records
