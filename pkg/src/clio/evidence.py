"""Provenance-complete evidence records and the retrieval tier ladder."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class SearchTier(str, Enum):
    """Retrieval tiers, ordered from most to least academically reputable.

    The staged protocol walks BOOK_INDEX -> SCHOLAR_INDEX -> GENERAL_WEB;
    PUBLISHER_API is a side channel invoked when a query carries structured
    bibliographic fields.
    """

    BOOK_INDEX = "book_index"
    SCHOLAR_INDEX = "scholar_index"
    PUBLISHER_API = "publisher_api"
    GENERAL_WEB = "general_web"


#: Default staged order (PUBLISHER_API sits outside the ladder, on demand).
TIER_ORDER = (SearchTier.BOOK_INDEX, SearchTier.SCHOLAR_INDEX, SearchTier.GENERAL_WEB)


@dataclass
class Bib:
    """Bibliographic metadata attached to an evidence record."""

    title: str = ""
    authors: list[str] = field(default_factory=list)
    venue: str = ""
    year: Optional[int] = None
    pages: str = ""
    citation_count: Optional[int] = None

    def is_complete(self) -> bool:
        """A citation is complete with a title plus one locator.

        A locator is either a URL (checked by the record, which owns the
        url field) or venue+year.
        """
        return bool(self.title) and bool(self.venue) and self.year is not None

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "authors": list(self.authors),
            "venue": self.venue,
            "year": self.year,
            "pages": self.pages,
            "citation_count": self.citation_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Bib":
        return cls(
            title=data.get("title", "") or "",
            authors=list(data.get("authors", []) or []),
            venue=data.get("venue", "") or "",
            year=data.get("year"),
            pages=data.get("pages", "") or "",
            citation_count=data.get("citation_count"),
        )


@dataclass
class EvidenceRecord:
    """One citation unit: verbatim quote, bibliography, URL, and tier.

    Invariant: quote non-empty OR the citation is complete (title plus a
    locator, where a URL counts as a locator). Web-derived records carry a
    URL. ``step_ref`` links the record back to the reasoning step that
    produced it once the record enters a trace.
    """

    record_id: str
    quote: str = ""
    bib: Bib = field(default_factory=Bib)
    url: str = ""
    tier: SearchTier = SearchTier.GENERAL_WEB
    retrieved_at: str = ""
    step_ref: Optional[int] = None

    def has_locator(self) -> bool:
        return bool(self.url) or (bool(self.bib.venue) and self.bib.year is not None)

    def citation_complete(self) -> bool:
        return bool(self.bib.title) and self.has_locator()

    def is_provenance_complete(self) -> bool:
        return bool(self.quote) or self.citation_complete()

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "quote": self.quote,
            "bib": self.bib.to_dict(),
            "url": self.url,
            "tier": self.tier.value,
            "retrieved_at": self.retrieved_at,
            "step_ref": self.step_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvidenceRecord":
        return cls(
            record_id=data["record_id"],
            quote=data.get("quote", "") or "",
            bib=Bib.from_dict(data.get("bib", {}) or {}),
            url=data.get("url", "") or "",
            tier=SearchTier(data.get("tier", "general_web")),
            retrieved_at=data.get("retrieved_at", "") or "",
            step_ref=data.get("step_ref"),
        )


def normalize_for_quote_check(text: str) -> str:
    """Normalization applied before exact-quote comparison.

    Collapses whitespace runs to a single space and strips soft hyphens;
    case is preserved because it carries meaning in citations.
    """
    text = text.replace("­", "")
    return " ".join(text.split())


def quote_present(quote: str, source_text: str) -> bool:
    """Exact substring check under whitespace normalization."""
    if not quote:
        return False
    return normalize_for_quote_check(quote) in normalize_for_quote_check(source_text)
