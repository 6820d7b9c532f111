"""Audio transcription with size-based chunking and a model cleanup pass."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

from clio.errors import BackendError, DecodeError

log = logging.getLogger(__name__)

# Upstream speech services cap request payloads; files above this are split.
SEGMENT_LIMIT_BYTES = 25 * 1024 * 1024


@dataclass
class TranscriptBundle:
    """Raw transcript plus the refined/summary/key-point views of it."""

    raw_transcript: str
    refined_transcript: str
    summary: str
    key_points: list[str] = field(default_factory=list)
    output_path: str = ""


def segment_ranges(total_size: int, limit: int | None = None) -> list[tuple[int, int]]:
    """Split [0, total_size) into ceil(total/limit) near-equal ranges.

    Segment lengths differ by at most one byte and every segment fits the
    limit; the ranges partition the file exactly. The limit defaults to
    SEGMENT_LIMIT_BYTES as it stands at call time.
    """
    if limit is None:
        limit = SEGMENT_LIMIT_BYTES
    if total_size <= 0:
        return []
    count = math.ceil(total_size / limit)
    base = total_size // count
    remainder = total_size % count
    ranges = []
    start = 0
    for i in range(count):
        length = base + (1 if i < remainder else 0)
        ranges.append((start, start + length))
        start += length
    return ranges


def _parse_bundle_reply(reply: str) -> tuple[str, str, list[str]]:
    refined = []
    summary = []
    points: list[str] = []
    section = None
    headers = (("optimized transcription", "refined"),
               ("summary", "summary"),
               ("key points", "points"))
    for line in reply.splitlines():
        lowered = line.strip().lower()
        matched = False
        for prefix, name in headers:
            if lowered.startswith(prefix):
                section = name
                # Keep any content that shares the header line.
                _, _, rest = line.partition(":")
                line = rest.strip()
                matched = True
                break
        if matched and not line:
            continue
        if section == "refined":
            refined.append(line)
        elif section == "summary":
            summary.append(line)
        elif section == "points":
            stripped = line.strip()
            if stripped.startswith(("-", "*")):
                points.append(stripped.lstrip("-* ").strip())
            elif stripped:
                points.append(stripped)
    return ("\n".join(refined).strip(), "\n".join(summary).strip(), points)


def refine_transcript(raw: str, model) -> tuple[str, str, list[str]]:
    """Ask the model for a cleaned transcript, summary, and key points.

    Degrades to the raw transcript with empty extras when the model is
    unavailable or its reply has none of the expected sections.
    """
    if model is None:
        return raw, "", []
    prompt = (
        "Below is a raw speech-to-text transcript. Produce three sections, "
        "each introduced by its header line exactly as written here:\n"
        "Optimized Transcription:\nSummary:\nKey Points:\n"
        "Fix recognition errors in the transcription, keep the summary to "
        "a few sentences, and give key points as dashed bullets.\n\n"
        + raw
    )
    try:
        reply = model.complete(prompt)
    except BackendError:
        return raw, "", []
    refined, summary, points = _parse_bundle_reply(reply)
    if not refined:
        return raw, "", []
    return refined, summary, points


def transcribe_audio(path: str, backends, output_dir: str = "") -> TranscriptBundle:
    """Transcribe an audio file, splitting oversized files into segments.

    Segments are transcribed in order and joined with single spaces before
    refinement, so the raw transcript reads continuously. When output_dir
    is given the full bundle is written to <stem>_transcript.txt there.
    """
    size = os.path.getsize(path)
    if size == 0:
        raise DecodeError(f"audio file is empty: {path}")
    asr = backends.require("asr")
    parts: list[str] = []
    with open(path, "rb") as fh:
        for start, end in segment_ranges(size):
            fh.seek(start)
            parts.append(asr.transcribe(fh.read(end - start)))
    if len(parts) > 1:
        log.info("audio split into %d segments of at most %d bytes",
                 len(parts), SEGMENT_LIMIT_BYTES)
    raw = " ".join(part.strip() for part in parts if part.strip())
    refined, summary, points = refine_transcript(raw, getattr(backends, "model", None))
    bundle = TranscriptBundle(raw_transcript=raw, refined_transcript=refined,
                              summary=summary, key_points=points)
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        stem = os.path.splitext(os.path.basename(path))[0]
        out_path = os.path.join(output_dir, f"{stem}_transcript.txt")
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write("Raw Transcription:\n" + raw + "\n\n")
            fh.write("Optimized Transcription:\n" + refined + "\n\n")
            fh.write("Summary:\n" + summary + "\n\n")
            fh.write("Key Points:\n")
            for point in points:
                fh.write(f"- {point}\n")
        bundle.output_path = out_path
    return bundle
