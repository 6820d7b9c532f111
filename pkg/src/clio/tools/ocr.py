"""Manuscript and printed-text transcription from images.

Two engine families sit behind the backend seam: a western-manuscript
service that takes an uploaded image URL and returns PAGE-XML through a
submit/poll job cycle, and an asian-script service that transcribes image
bytes directly. A script classifier picks the family, and a model pass
cleans the raw lines afterwards.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

from clio.errors import BackendError, EngineTimeout
from clio.evidence import normalize_for_quote_check

log = logging.getLogger(__name__)

WESTERN = "western_manuscript"
ASIAN = "asian_script"

DEFAULT_POLL_INTERVAL = 5.0
DEFAULT_POLL_TIMEOUT = 300.0

# Unicode blocks that mark CJK or other east-asian scripts.
_ASIAN_RANGES = (
    (0x2E80, 0x2FDF),   # CJK radicals
    (0x3000, 0x30FF),   # punctuation, hiragana, katakana
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),   # unified ideographs
    (0xF900, 0xFAFF),
    (0xAC00, 0xD7AF),   # hangul
    (0x0F00, 0x0FFF),   # tibetan
)


@dataclass
class OcrOutcome:
    """Result of one transcription attempt.

    Exactly one of raw_lines / fallback_description carries content: when
    the engines find no legible text the description of the image stands
    in for a transcript.
    """

    engine: str
    raw_lines: list[str] = field(default_factory=list)
    refined_text: str = ""
    fallback_description: str = ""


def parse_page_xml(xml_text: str) -> list[str]:
    """Extract line transcriptions from PAGE-XML, in reading order."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise BackendError(f"unparseable PAGE-XML: {exc}") from exc
    lines: list[str] = []
    for node in root.iter():
        if not node.tag.endswith("TextLine"):
            continue
        for child in node.iter():
            if child.tag.endswith("Unicode") and child.text:
                lines.append(child.text)
                break
    return [line for line in lines if line.strip()]


def _looks_asian(text: str) -> bool:
    hits = sum(1 for ch in text
               for lo, hi in _ASIAN_RANGES if lo <= ord(ch) <= hi)
    return hits >= 2


def _exif_hint(image_path: str) -> str:
    try:
        from PIL import Image
        with Image.open(image_path) as img:
            exif = img.getexif()
        # 270 is ImageDescription, 37510 is UserComment.
        parts = []
        for tag in (270, 37510):
            value = exif.get(tag)
            if isinstance(value, bytes):
                value = value.decode("utf-8", errors="replace")
            if value:
                parts.append(str(value))
        return " ".join(parts)
    except Exception:
        return ""


def classify_script(image_path: str, model=None, hint: str = "") -> str:
    """Decide which OCR family an image belongs to.

    Asks the model when one is available; otherwise (or when the reply is
    unusable) falls back to a Unicode-range check on the supplied hint or
    the image's embedded description.
    """
    if model is not None:
        prompt = (
            "Classify the dominant script in the image at "
            f"{image_path}. Answer with exactly one word: 'western' for "
            "latin or other european scripts (including manuscripts), or "
            "'asian' for CJK, tibetan, or related scripts."
        )
        if hint:
            full = prompt + f" Context hint: {hint}"
        else:
            full = prompt
        try:
            reply = model.complete(full).strip().lower()
            if "asian" in reply:
                return ASIAN
            if "western" in reply:
                return WESTERN
        except BackendError:
            log.warning("script classifier model unavailable; using heuristic")
    probe = hint or _exif_hint(image_path)
    return ASIAN if _looks_asian(probe) else WESTERN


def _refine(lines: list[str], model) -> str:
    joined = "\n".join(lines)
    if model is None:
        return joined
    prompt = (
        "The following lines were transcribed from an image by an OCR "
        "engine. Correct obvious recognition errors, restore word breaks, "
        "and return only the cleaned transcription:\n\n" + joined
    )
    try:
        refined = model.complete(prompt).strip()
    except BackendError:
        return joined
    return refined if refined else joined


def _describe(image_path: str, model) -> str:
    if model is not None:
        try:
            return model.complete(
                f"No legible text was found in the image at {image_path}. "
                "Describe what the image shows instead."
            ).strip() or "no legible text detected"
        except BackendError:
            pass
    return "no legible text detected"


def ocr_transcribe(image_path: str, backends, *, hint: str = "",
                   poll_interval: float = DEFAULT_POLL_INTERVAL,
                   poll_timeout: float = DEFAULT_POLL_TIMEOUT,
                   script: Optional[str] = None) -> OcrOutcome:
    """Transcribe an image, choosing the engine by script classification.

    The western path uploads the image, submits an OCR job, and polls until
    PAGE-XML arrives (EngineTimeout past poll_timeout). The asian path
    sends bytes directly. Empty results fall back to a model description
    of the image.
    """
    engine = script or classify_script(image_path, getattr(backends, "model", None),
                                       hint=hint)
    if engine == WESTERN:
        image_url = backends.require("image_host").upload(image_path)
        ocr = backends.require("ocr_western")
        job_id = ocr.submit(image_url)
        waited = 0.0
        page_xml = ocr.poll(job_id)
        while page_xml is None:
            if waited >= poll_timeout:
                raise EngineTimeout(
                    f"manuscript OCR job {job_id} still pending after "
                    f"{poll_timeout:.0f}s")
            backends.sleep(poll_interval)
            waited += poll_interval
            page_xml = ocr.poll(job_id)
        raw_lines = parse_page_xml(page_xml)
    else:
        with open(image_path, "rb") as fh:
            data = fh.read()
        raw_lines = [line for line in backends.require("ocr_asian").transcribe(data)
                     if line.strip()]

    model = getattr(backends, "model", None)
    if raw_lines:
        return OcrOutcome(engine=engine, raw_lines=raw_lines,
                          refined_text=_refine(raw_lines, model))
    return OcrOutcome(engine=engine, raw_lines=[], refined_text="",
                      fallback_description=_describe(image_path, model))


def transcript_matches(refined: str, raw_lines: list[str]) -> bool:
    """Check the refinement kept recognizable content from the raw lines.

    A cheap guard used in tests: at least one raw token of length >= 4
    must survive into the refined text (whitespace-normalized).
    """
    refined_norm = normalize_for_quote_check(refined).lower()
    tokens = {tok.lower() for line in raw_lines
              for tok in re.findall(r"\w{4,}", line)}
    if not tokens:
        return bool(refined_norm)
    return any(tok in refined_norm for tok in tokens)
