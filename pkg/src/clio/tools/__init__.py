"""Concrete tool layer: every tool id an agent may name resolves here.

The Toolbox binds tool implementations to one session's backends,
workspace, caches, and evidence-id allocator. Calls go through
Toolbox.call, which applies the transport retry policy, captures a
diagnostics entry per attempt, and normalizes results into ToolResult
objects carrying payload plus evidence records.
"""

from __future__ import annotations

import os
import urllib.parse
from dataclasses import dataclass, field
from typing import Callable, Optional

from clio.backends import Backends, with_retries
from clio.errors import BackendError, RateLimited, ToolError, UnsupportedType
from clio.evidence import Bib, EvidenceRecord, SearchTier
from clio.tools import audio as audio_tools
from clio.tools import documents as document_tools
from clio.tools import image as image_tools
from clio.tools import ocr as ocr_tools
from clio.tools import translate as translate_tools
from clio.tools import video as video_tools
from clio.tools import web as web_tools
from clio.tools.web import FetchCache, PageContent


@dataclass
class ToolResult:
    tool_id: str
    status: str = "ok"
    payload: object = None
    evidence: list[EvidenceRecord] = field(default_factory=list)
    error: str = ""


def _default_id_alloc() -> Callable[[], str]:
    counter = {"n": 0}

    def alloc() -> str:
        counter["n"] += 1
        return f"ev-{counter['n']:04d}"

    return alloc


class Toolbox:
    """Session-scoped tool dispatcher.

    One instance per run session: it owns the page cache, the current-page
    cursor for paging/find sub-operations, and the evidence id sequence,
    so identical call sequences produce identical artifacts.
    """

    def __init__(self, backends: Backends, workspace_dir: str = ".",
                 robots=None, id_alloc: Optional[Callable[[], str]] = None,
                 transport_retries: int = 3,
                 ocr_poll_interval: float = ocr_tools.DEFAULT_POLL_INTERVAL,
                 ocr_poll_timeout: float = ocr_tools.DEFAULT_POLL_TIMEOUT):
        self.backends = backends
        self.workspace_dir = str(workspace_dir)
        self.robots = robots
        self.id_alloc = id_alloc or _default_id_alloc()
        self.transport_retries = transport_retries
        self.ocr_poll_interval = ocr_poll_interval
        self.ocr_poll_timeout = ocr_poll_timeout
        self.fetch_cache = FetchCache()
        self.current_page: Optional[PageContent] = None
        self.calls: list[dict] = []
        self._rotation = None

    # -- plumbing --------------------------------------------------------

    def call(self, tool_id: str, **kwargs) -> ToolResult:
        """Invoke a tool by id; transport errors retry, failures become
        tool_error results rather than exceptions."""
        method_name = TOOL_REGISTRY.get(tool_id)
        entry = {"tool": tool_id, "arguments": dict(kwargs), "status": "ok"}
        self.calls.append(entry)
        if method_name is None:
            entry["status"] = "tool_error"
            entry["error"] = f"unknown tool: {tool_id}"
            return ToolResult(tool_id=tool_id, status="tool_error",
                              error=entry["error"])
        method = getattr(self, method_name)
        try:
            result = with_retries(lambda: method(**kwargs),
                                  retries=self.transport_retries,
                                  sleep=self.backends.sleep,
                                  retryable=(RateLimited,))
        except (ToolError, BackendError, ValueError, OSError) as exc:
            entry["status"] = "tool_error"
            entry["error"] = str(exc)
            return ToolResult(tool_id=tool_id, status="tool_error",
                              error=str(exc))
        if not isinstance(result, ToolResult):
            result = ToolResult(tool_id=tool_id, payload=result)
        result.tool_id = tool_id
        return result

    def _stamp(self) -> str:
        return self.backends.clock.now_iso()

    def _page_evidence(self, page: PageContent) -> EvidenceRecord:
        if page.title:
            quote = ""
            bib = Bib(title=page.title)
        else:
            quote = page.text[:200] if page.text else page.url
            bib = Bib()
        return EvidenceRecord(
            record_id=self.id_alloc(), quote=quote, bib=bib, url=page.url,
            tier=SearchTier.GENERAL_WEB, retrieved_at=page.fetched_at)

    def _page_payload(self, page: PageContent) -> dict:
        return {
            "url": page.url,
            "title": page.title,
            "text": page.viewport(),
            "page": page.current_page(),
            "page_count": page.page_count(),
            "snapshot_date": page.snapshot_date,
            "note": page.note,
        }

    # -- web browsing ----------------------------------------------------

    def tool_web_search(self, query: str, refine: bool = False) -> ToolResult:
        diagnostics: list = []
        refiner = None
        if refine and self.backends.model is not None:
            refiner = lambda q: self.backends.model.complete(
                "Rewrite this web search query to be more effective. "
                "Return only the query.\n\n" + q)
        results = web_tools.web_search(query, self.backends.require("search"),
                                       refiner=refiner, diagnostics=diagnostics)
        stamp = self._stamp()
        evidence = [
            EvidenceRecord(
                record_id=self.id_alloc(),
                quote=hit.get("snippet", ""),
                bib=Bib(title=hit.get("title", "")),
                url=hit.get("url", ""),
                tier=SearchTier.GENERAL_WEB,
                retrieved_at=stamp,
            )
            for hit in results
        ]
        payload = {"results": results}
        if diagnostics:
            payload["diagnostics"] = diagnostics
        return ToolResult(tool_id="web_search", payload=payload,
                          evidence=evidence)

    def tool_visit_page(self, url: str) -> ToolResult:
        page = web_tools.visit_page(url, self.backends.require("fetch"),
                                    cache=self.fetch_cache, robots=self.robots,
                                    clock=self.backends.clock)
        self.current_page = page
        return ToolResult(tool_id="visit_page",
                          payload=self._page_payload(page),
                          evidence=[self._page_evidence(page)])

    def tool_download_file(self, url: str) -> ToolResult:
        resp = self.backends.require("fetch").fetch(url)
        if resp.status >= 400:
            raise ToolError(f"HTTP {resp.status} while downloading {url}")
        name = os.path.basename(urllib.parse.urlparse(url).path) or "download.bin"
        assets_dir = os.path.join(self.workspace_dir, "assets")
        os.makedirs(assets_dir, exist_ok=True)
        dest = os.path.join(assets_dir, name)
        with open(dest, "wb") as fh:
            fh.write(resp.body)
        return ToolResult(tool_id="download_file",
                          payload={"path": dest, "bytes": len(resp.body)})

    def tool_archive_search(self, url: str, target_date: str) -> ToolResult:
        page = web_tools.archive_search(url, target_date,
                                        self.backends.require("archive"),
                                        clock=self.backends.clock)
        self.current_page = page
        return ToolResult(tool_id="archive_search",
                          payload=self._page_payload(page),
                          evidence=[self._page_evidence(page)])

    def _require_page(self) -> PageContent:
        if self.current_page is None:
            raise ToolError("no page is open; visit a page first")
        return self.current_page

    def tool_page_down(self) -> ToolResult:
        page = self._require_page()
        page.page_down()
        return ToolResult(tool_id="page_down", payload=self._page_payload(page))

    def tool_page_up(self) -> ToolResult:
        page = self._require_page()
        page.page_up()
        return ToolResult(tool_id="page_up", payload=self._page_payload(page))

    def tool_find_in_page(self, term: str) -> ToolResult:
        page = self._require_page()
        pos = page.find(term)
        payload = self._page_payload(page)
        payload["found_at"] = pos
        return ToolResult(tool_id="find_in_page", payload=payload)

    def tool_find_next(self) -> ToolResult:
        page = self._require_page()
        pos = page.find_next()
        payload = self._page_payload(page)
        payload["found_at"] = pos
        return ToolResult(tool_id="find_next", payload=payload)

    def tool_inspect_text(self, path: str) -> ToolResult:
        doc = document_tools.parse_document(path)
        return ToolResult(tool_id="inspect_text",
                          payload={"kind": doc.kind, "text": doc.text,
                                   "pages": len(doc.pages)})

    # -- documents -------------------------------------------------------

    def _typed_parse(self, path: str, expected: str) -> ToolResult:
        doc = document_tools.parse_document(path)
        if doc.kind != expected:
            raise UnsupportedType(
                f"expected a {expected} file, got {doc.kind}: {path}")
        payload = {"kind": doc.kind, "text": doc.text, "pages": doc.pages}
        if doc.table is not None:
            payload["table"] = doc.table
        return ToolResult(tool_id=f"parse_{expected}", payload=payload)

    def tool_parse_document(self, path: str) -> ToolResult:
        doc = document_tools.parse_document(path)
        payload = {"kind": doc.kind, "text": doc.text, "pages": doc.pages}
        if doc.table is not None:
            payload["table"] = doc.table
        return ToolResult(tool_id="parse_document", payload=payload)

    def tool_parse_pdf(self, path: str) -> ToolResult:
        return self._typed_parse(path, "pdf")

    def tool_parse_docx(self, path: str) -> ToolResult:
        return self._typed_parse(path, "docx")

    def tool_parse_xlsx(self, path: str) -> ToolResult:
        return self._typed_parse(path, "xlsx")

    def tool_parse_pptx(self, path: str) -> ToolResult:
        return self._typed_parse(path, "pptx")

    def tool_analyze_image(self, path: str) -> ToolResult:
        model = self.backends.require("model")
        description = model.complete(
            f"Describe the charts, figures, or notable content in the image "
            f"at {path}, transcribing any embedded labels.")
        return ToolResult(tool_id="analyze_image",
                          payload={"description": description})

    # -- ocr -------------------------------------------------------------

    def tool_classify_script(self, path: str, hint: str = "") -> ToolResult:
        engine = ocr_tools.classify_script(path, self.backends.model, hint=hint)
        return ToolResult(tool_id="classify_script", payload={"engine": engine})

    def _ocr(self, path: str, script: Optional[str], hint: str = "") -> ToolResult:
        outcome = ocr_tools.ocr_transcribe(
            path, self.backends, hint=hint, script=script,
            poll_interval=self.ocr_poll_interval,
            poll_timeout=self.ocr_poll_timeout)
        return ToolResult(tool_id="ocr_transcribe", payload={
            "engine": outcome.engine,
            "raw_lines": outcome.raw_lines,
            "refined_text": outcome.refined_text,
            "fallback_description": outcome.fallback_description,
        })

    def tool_ocr_transcribe(self, path: str, hint: str = "") -> ToolResult:
        return self._ocr(path, None, hint=hint)

    def tool_transcribe_manuscript(self, path: str) -> ToolResult:
        return self._ocr(path, ocr_tools.WESTERN)

    def tool_transcribe_asian_script(self, path: str) -> ToolResult:
        return self._ocr(path, ocr_tools.ASIAN)

    def tool_refine_transcript(self, text: str) -> ToolResult:
        refined, summary, points = audio_tools.refine_transcript(
            text, self.backends.model)
        return ToolResult(tool_id="refine_transcript", payload={
            "refined_transcript": refined,
            "summary": summary,
            "key_points": points,
        })

    # -- audio -----------------------------------------------------------

    def tool_transcribe_audio(self, path: str) -> ToolResult:
        bundle = audio_tools.transcribe_audio(
            path, self.backends,
            output_dir=os.path.join(self.workspace_dir, "assets"))
        return ToolResult(tool_id="transcribe_audio", payload={
            "raw_transcript": bundle.raw_transcript,
            "refined_transcript": bundle.refined_transcript,
            "summary": bundle.summary,
            "key_points": bundle.key_points,
            "output_path": bundle.output_path,
        })

    # -- translation -----------------------------------------------------

    def tool_translate_text(self, text: str, target_language: str) -> ToolResult:
        result = translate_tools.translate(text, target_language,
                                           self.backends.require("translator"))
        return ToolResult(tool_id="translate_text", payload=result)

    # -- images ----------------------------------------------------------

    def tool_reverse_image_search(self, path: str) -> ToolResult:
        matches = image_tools.reverse_image_search(path, self.backends)
        stamp = self._stamp()
        evidence = [
            EvidenceRecord(
                record_id=self.id_alloc(),
                quote=match.description,
                bib=Bib(title=match.page_title),
                url=match.match_url,
                tier=SearchTier.GENERAL_WEB,
                retrieved_at=stamp,
            )
            for match in matches if match.description or match.page_title
        ]
        return ToolResult(tool_id="reverse_image_search",
                          payload={"matches": [m.to_dict() for m in matches]},
                          evidence=evidence)

    def tool_visit_image_page(self, url: str) -> ToolResult:
        result = self.tool_visit_page(url)
        result.tool_id = "visit_image_page"
        return result

    # -- video -----------------------------------------------------------

    def tool_download_video(self, video_url: str) -> ToolResult:
        download = video_tools.download_video(
            video_url, self.backends,
            os.path.join(self.workspace_dir, "downloads"))
        return ToolResult(tool_id="download_video", payload=download)

    def tool_extract_frames(self, video_url: str,
                            frames_per_second: float = 1.0) -> ToolResult:
        report = video_tools.extract_video_frames(
            video_url, frames_per_second, self.backends, self.workspace_dir)
        return ToolResult(tool_id="extract_frames", payload=report.to_dict())

    # -- literature ------------------------------------------------------

    def tool_search_priority(self, phrase: str, exact_match_required: bool = False,
                             max_results: int = 5, max_steps: int = 10) -> ToolResult:
        from clio import literature
        query = literature.LiteratureQuery(
            phrase=phrase, exact_match_required=exact_match_required,
            max_results=max_results, max_steps=max_steps)
        result = literature.search_priority(query, self.backends,
                                            id_alloc=self.id_alloc)
        return ToolResult(
            tool_id="search_priority",
            payload={
                "tiers_attempted": [tier.value for tier in result.tiers_attempted],
                "budget_exhausted": result.budget_exhausted,
                "records": [record.to_dict() for record in result.records],
            },
            evidence=result.records,
        )

    def tool_search_scholar(self, query: str, k: int = 5) -> ToolResult:
        from clio import literature
        records = literature.find_relevant_literature(query, k, self.backends,
                                                      id_alloc=self.id_alloc)
        return ToolResult(tool_id="search_scholar",
                          payload={"records": [r.to_dict() for r in records]},
                          evidence=records)

    def tool_find_relevant_literature(self, topic: str, k: int = 5) -> ToolResult:
        result = self.tool_search_scholar(topic, k)
        result.tool_id = "find_relevant_literature"
        return result

    def tool_extract_book_match(self, phrase: str, domain: str = "") -> ToolResult:
        from clio import literature
        snippets = literature.extract_book_match(phrase, self.backends,
                                                 domain=domain)
        stamp = self._stamp()
        evidence = [
            EvidenceRecord(
                record_id=self.id_alloc(),
                quote=snippet.snippet_text,
                bib=Bib(title=snippet.source_title,
                        pages=str(snippet.page_number or "")),
                url=snippet.source_url,
                tier=SearchTier.BOOK_INDEX,
                retrieved_at=stamp,
            )
            for snippet in snippets
        ]
        return ToolResult(tool_id="extract_book_match",
                          payload={"snippets": [s.to_dict() for s in snippets]},
                          evidence=evidence)

    def tool_crawl_book_index(self, phrase: str, domains: Optional[list] = None) -> ToolResult:
        from clio import literature
        domains = domains or ["books.example.com"]
        if self._rotation is None or self._rotation.domains != list(domains):
            self._rotation = literature.DomainRotation(domains)
        snippets = literature.crawl_book_index(phrase, self.backends,
                                               self._rotation)
        return ToolResult(tool_id="crawl_book_index",
                          payload={"snippets": [s.to_dict() for s in snippets]})

    def tool_general_web_search(self, query: str) -> ToolResult:
        result = self.tool_web_search(query)
        result.tool_id = "general_web_search"
        return result

    def tool_fetch_and_parse_pdf(self, url: str) -> ToolResult:
        from clio import literature
        doc = literature.fetch_and_parse_pdf(url, self.backends)
        return ToolResult(tool_id="fetch_and_parse_pdf",
                          payload={"kind": doc.kind, "text": doc.text,
                                   "pages": doc.pages})

    def tool_publisher_structured_search(self, **fields) -> ToolResult:
        from clio import literature
        records = literature.publisher_structured_search(fields, self.backends,
                                                         id_alloc=self.id_alloc)
        return ToolResult(tool_id="publisher_structured_search",
                          payload={"records": [r.to_dict() for r in records]},
                          evidence=records)

    def tool_publisher_search(self, **fields) -> ToolResult:
        result = self.tool_publisher_structured_search(**fields)
        result.tool_id = "publisher_search"
        return result


# Tool id -> Toolbox method. Agents name tools from this table only.
TOOL_REGISTRY: dict[str, str] = {
    "web_search": "tool_web_search",
    "visit_page": "tool_visit_page",
    "download_file": "tool_download_file",
    "archive_search": "tool_archive_search",
    "page_up": "tool_page_up",
    "page_down": "tool_page_down",
    "find_in_page": "tool_find_in_page",
    "find_next": "tool_find_next",
    "inspect_text": "tool_inspect_text",
    "reverse_image_search": "tool_reverse_image_search",
    "visit_image_page": "tool_visit_image_page",
    "search_scholar": "tool_search_scholar",
    "find_relevant_literature": "tool_find_relevant_literature",
    "extract_book_match": "tool_extract_book_match",
    "crawl_book_index": "tool_crawl_book_index",
    "general_web_search": "tool_general_web_search",
    "publisher_search": "tool_publisher_search",
    "publisher_structured_search": "tool_publisher_structured_search",
    "fetch_and_parse_pdf": "tool_fetch_and_parse_pdf",
    "search_priority": "tool_search_priority",
    "parse_document": "tool_parse_document",
    "parse_pdf": "tool_parse_pdf",
    "parse_docx": "tool_parse_docx",
    "parse_xlsx": "tool_parse_xlsx",
    "parse_pptx": "tool_parse_pptx",
    "analyze_image": "tool_analyze_image",
    "classify_script": "tool_classify_script",
    "ocr_transcribe": "tool_ocr_transcribe",
    "transcribe_manuscript": "tool_transcribe_manuscript",
    "transcribe_asian_script": "tool_transcribe_asian_script",
    "refine_transcript": "tool_refine_transcript",
    "transcribe_audio": "tool_transcribe_audio",
    "translate_text": "tool_translate_text",
    "download_video": "tool_download_video",
    "extract_frames": "tool_extract_frames",
    "extract_video_frames": "tool_extract_frames",
}


def resolve_tool(tool_id: str) -> bool:
    """True when a tool id is implemented by the Toolbox."""
    return tool_id in TOOL_REGISTRY
