"""The eight specialist agents: registry, routing, and invocation.

Each agent is declared as an AgentSpec naming its modality, ordered
toolset, and role prompt (shipped as versioned text assets). Routing is
a pure function of attachment media types; composing multi-agent plans
is the manager's job, not the router's.
"""

from __future__ import annotations

import importlib.resources
import mimetypes
import re
import urllib.parse
from dataclasses import dataclass, field
from typing import Optional

from clio.backends import Backends
from clio.errors import AgentUnavailable, ToolError
from clio.evidence import EvidenceRecord
from clio.tools import Toolbox

PROMPT_VERSION = "v1"

_URL_RE = re.compile(r"https?://[^\s)\]>\"']+")

_DOCUMENT_TYPES = {
    "application/pdf",
    "application/vnd.openxmlformats-officedocument.wordprocessingml.document",
    "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
    "application/vnd.openxmlformats-officedocument.presentationml.presentation",
    "text/plain", "text/csv", "text/markdown", "application/json",
}

_EXTENSION_TYPES = {
    ".pdf": "application/pdf",
    ".docx": "application/vnd.openxmlformats-officedocument.wordprocessingml.document",
    ".xlsx": "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
    ".pptx": "application/vnd.openxmlformats-officedocument.presentationml.presentation",
    ".txt": "text/plain", ".md": "text/markdown", ".csv": "text/csv",
    ".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg",
    ".gif": "image/gif", ".tif": "image/tiff", ".tiff": "image/tiff",
    ".webp": "image/webp", ".bmp": "image/bmp",
    ".mp3": "audio/mpeg", ".wav": "audio/wav", ".m4a": "audio/mp4",
    ".flac": "audio/flac", ".ogg": "audio/ogg",
    ".mp4": "video/mp4", ".mov": "video/quicktime", ".avi": "video/x-msvideo",
    ".mkv": "video/x-matroska", ".webm": "video/webm",
}


def media_type_of(path_or_url: str) -> str:
    """Best-effort media type for an attachment path or URL."""
    path = urllib.parse.urlparse(path_or_url).path or path_or_url
    ext = path[path.rfind("."):].lower() if "." in path else ""
    if ext in _EXTENSION_TYPES:
        return _EXTENSION_TYPES[ext]
    guessed, _ = mimetypes.guess_type(path)
    return guessed or "application/octet-stream"


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    modality: str
    tool_ids: tuple[str, ...]
    system_prompt: str
    invocation_contract: dict


@dataclass
class SubtaskRequest:
    agent_id: str
    instruction: str
    attachments: list[str] = field(default_factory=list)
    # Named arguments beyond the instruction text, matching the agent's
    # invocation contract (e.g. translator text/target_language).
    arguments: dict = field(default_factory=dict)


@dataclass
class AgentResult:
    agent_id: str
    payload: object
    evidence: list[EvidenceRecord] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)


def _load_prompt(agent_id: str) -> str:
    resource = importlib.resources.files("clio").joinpath(
        "prompts", f"{agent_id}.{PROMPT_VERSION}.txt")
    return resource.read_text(encoding="utf-8")


_AGENT_TABLE: list[tuple[str, str, tuple[str, ...], dict]] = [
    ("text_webbrowser", "text",
     ("web_search", "visit_page", "download_file", "archive_search",
      "page_up", "page_down", "find_in_page", "find_next", "inspect_text"),
     {"arguments": ["instruction"], "result": "page text and search hits"}),
    ("image_information", "image",
     ("reverse_image_search", "visit_image_page"),
     {"arguments": ["instruction", "attachments"],
      "result": "ranked match pages with similarity"}),
    ("literature_search", "scholarly text",
     ("search_scholar", "find_relevant_literature", "extract_book_match",
      "crawl_book_index", "general_web_search", "publisher_search",
      "publisher_structured_search", "fetch_and_parse_pdf"),
     {"arguments": ["instruction", "exact_match_required"],
      "result": "evidence records with full citations"}),
    ("file_processing", "documents",
     ("parse_pdf", "parse_docx", "parse_xlsx", "parse_pptx", "analyze_image"),
     {"arguments": ["attachments"], "result": "extracted text per file"}),
    ("ocr", "image text",
     ("classify_script", "transcribe_manuscript", "transcribe_asian_script",
      "refine_transcript"),
     {"arguments": ["attachments"], "result": "raw and refined transcripts"}),
    ("speech_recognition", "audio",
     ("transcribe_audio", "refine_transcript"),
     {"arguments": ["attachments"],
      "result": "transcript bundle with summary and key points"}),
    ("translator", "multilingual text",
     ("translate_text",),
     {"arguments": ["text", "target_language"],
      "result": "translation with the original retained"}),
    ("video", "video",
     ("download_video", "extract_frames"),
     {"arguments": ["video_url", "frames_per_second"],
      "result": "frame files and a video report"}),
]


class AgentRegistry:
    """Immutable ordered collection of agent specs."""

    def __init__(self, specs: list[AgentSpec]):
        self._specs = tuple(specs)
        self._by_id = {spec.agent_id: spec for spec in specs}
        if len(self._by_id) != len(self._specs):
            raise ValueError("duplicate agent_id in registry")

    def specs(self) -> tuple[AgentSpec, ...]:
        return self._specs

    def get(self, agent_id: str) -> AgentSpec:
        if agent_id not in self._by_id:
            raise AgentUnavailable(f"no such agent: {agent_id}")
        return self._by_id[agent_id]

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._by_id


def build_registry(config: Optional[dict] = None) -> AgentRegistry:
    """Construct the registry, honoring enable/prompt overrides.

    config["agents"][agent_id] may set "enabled": false to drop an agent
    or "system_prompt": "..." to replace its role prompt.
    """
    overrides = (config or {}).get("agents", {})
    specs = []
    for agent_id, modality, tool_ids, contract in _AGENT_TABLE:
        entry = overrides.get(agent_id, {})
        if not entry.get("enabled", True):
            continue
        prompt = entry.get("system_prompt") or _load_prompt(agent_id)
        specs.append(AgentSpec(agent_id=agent_id, modality=modality,
                               tool_ids=tool_ids, system_prompt=prompt,
                               invocation_contract=contract))
    return AgentRegistry(specs)


def list_agents(registry: AgentRegistry) -> list[AgentSpec]:
    return list(registry.specs())


def route(instruction: str, media_types: Optional[list[str]] = None) -> str:
    """Pick the agent for a subtask from its attachment media types.

    Total: every input maps to some agent, with text_webbrowser as the
    fallback for pure-text tasks and unknown types.
    """
    if not instruction or not instruction.strip():
        raise ValueError("task descriptor must be non-empty")
    for media in media_types or []:
        major = media.split("/")[0].lower()
        if major == "image":
            return "image_information"
        if major == "audio":
            return "speech_recognition"
        if major == "video":
            return "video"
        if media.lower() in _DOCUMENT_TYPES:
            return "file_processing"
    return "text_webbrowser"


_MODALITY_MAJORS = {
    "image_information": ("image",),
    "ocr": ("image",),
    "speech_recognition": ("audio",),
    "video": ("video",),
}


def check_attachments(request: SubtaskRequest):
    """Reject attachments whose media type the agent cannot consume."""
    majors = _MODALITY_MAJORS.get(request.agent_id)
    for attachment in request.attachments:
        media = media_type_of(attachment)
        if majors is not None:
            if media.split("/")[0] not in majors:
                raise ToolError(
                    f"{request.agent_id} cannot accept {media} attachment "
                    f"{attachment}")
        elif request.agent_id == "file_processing":
            major = media.split("/")[0]
            if media not in _DOCUMENT_TYPES and major != "image":
                raise ToolError(f"unsupported file type: {attachment}")


def _gather(results, payloads, evidence):
    for result in results:
        payloads.append({"tool": result.tool_id, "status": result.status,
                         "payload": result.payload, "error": result.error})
        evidence.extend(result.evidence)


def invoke_agent(request: SubtaskRequest, registry: AgentRegistry,
                 backends: Backends, toolbox: Optional[Toolbox] = None,
                 workspace_dir: str = ".") -> AgentResult:
    """Run one specialist over a subtask and collect its tool activity.

    The diagnostics list mirrors every tool call attempted, in order.
    Tool failures surface as tool_error entries in the payload rather
    than exceptions, so the manager can observe and replan.
    """
    spec = registry.get(request.agent_id)
    toolbox = toolbox or Toolbox(backends, workspace_dir=workspace_dir)
    start = len(toolbox.calls)
    payloads: list[dict] = []
    evidence: list[EvidenceRecord] = []

    # The translator's empty-input short-circuit precedes any backend work.
    if spec.agent_id == "translator":
        text = request.arguments.get("text", request.instruction)
        if text == "":
            return AgentResult(agent_id=spec.agent_id, payload="",
                               evidence=[], diagnostics=[])

    check_attachments(request)

    if spec.agent_id == "text_webbrowser":
        urls = _URL_RE.findall(request.instruction)
        results = []
        if urls:
            for url in urls:
                results.append(toolbox.call("visit_page", url=url))
        else:
            search = toolbox.call("web_search", query=request.instruction)
            results.append(search)
            if search.status == "ok":
                hits = search.payload.get("results", [])
                if hits and hits[0].get("url"):
                    results.append(toolbox.call("visit_page",
                                                url=hits[0]["url"]))
        _gather(results, payloads, evidence)

    elif spec.agent_id == "image_information":
        results = [toolbox.call("reverse_image_search", path=path)
                   for path in request.attachments]
        _gather(results, payloads, evidence)

    elif spec.agent_id == "literature_search":
        result = toolbox.call(
            "search_priority",
            phrase=request.arguments.get("phrase", request.instruction),
            exact_match_required=bool(
                request.arguments.get("exact_match_required", False)),
            max_results=int(request.arguments.get("max_results", 5)),
            max_steps=int(request.arguments.get("max_steps", 10)))
        _gather([result], payloads, evidence)

    elif spec.agent_id == "file_processing":
        results = []
        for path in request.attachments:
            media = media_type_of(path)
            if media.startswith("image/"):
                results.append(toolbox.call("analyze_image", path=path))
            else:
                results.append(toolbox.call("parse_document", path=path))
        _gather(results, payloads, evidence)

    elif spec.agent_id == "ocr":
        results = [toolbox.call("ocr_transcribe", path=path,
                                hint=request.instruction)
                   for path in request.attachments]
        _gather(results, payloads, evidence)

    elif spec.agent_id == "speech_recognition":
        results = [toolbox.call("transcribe_audio", path=path)
                   for path in request.attachments]
        _gather(results, payloads, evidence)

    elif spec.agent_id == "translator":
        text = request.arguments.get("text", request.instruction)
        target = request.arguments.get("target_language", "english")
        result = toolbox.call("translate_text", text=text,
                              target_language=target)
        _gather([result], payloads, evidence)
        diagnostics = toolbox.calls[start:]
        payload = result.payload if result.status == "ok" else payloads
        return AgentResult(agent_id=spec.agent_id, payload=payload,
                           evidence=evidence, diagnostics=diagnostics)

    elif spec.agent_id == "video":
        url = request.arguments.get("video_url")
        if not url:
            urls = _URL_RE.findall(request.instruction)
            url = urls[0] if urls else None
        if not url and request.attachments:
            url = request.attachments[0]
        if not url:
            raise ToolError("video agent needs a video_url")
        result = toolbox.call(
            "extract_frames", video_url=url,
            frames_per_second=float(
                request.arguments.get("frames_per_second", 1.0)))
        _gather([result], payloads, evidence)

    return AgentResult(agent_id=spec.agent_id, payload=payloads,
                       evidence=evidence, diagnostics=toolbox.calls[start:])
