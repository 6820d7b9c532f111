"""Text extraction for PDF, DOCX, XLSX, PPTX, and plain-text files.

All parsers are standard-library only: the Office formats are unzipped and
read with ElementTree, and PDFs go through a small extractor that decodes
Flate/ASCII85/ASCIIHex content streams and collects the text-showing
operators. That
covers straightforwardly generated PDFs; scanned or exotic ones yield
little or no text, which callers surface rather than mask.
"""

from __future__ import annotations

import base64
import os
import re
import xml.etree.ElementTree as ET
import zipfile
import zlib
from dataclasses import dataclass, field
from typing import Optional

from clio.errors import CorruptFile, UnsupportedType

_WORD_NS = "{http://schemas.openxmlformats.org/wordprocessingml/2006/main}"
_SHEET_NS = "{http://schemas.openxmlformats.org/spreadsheetml/2006/main}"
_DRAW_NS = "{http://schemas.openxmlformats.org/drawingml/2006/main}"

_PLAIN_EXTENSIONS = {".txt", ".md", ".csv", ".tsv", ".json", ".log", ".text"}


@dataclass
class ParsedDocument:
    """Extracted document text; pages line up with pages/sheets/slides."""

    kind: str
    text: str
    pages: list[str] = field(default_factory=list)
    table: Optional[list[list[str]]] = None


# --- PDF ---------------------------------------------------------------

_OBJ_RE = re.compile(rb"(\d+)\s+\d+\s+obj\b(.*?)endobj", re.DOTALL)
_STREAM_RE = re.compile(rb"stream\r?\n(.*?)endstream", re.DOTALL)
_PAGE_RE = re.compile(rb"/Type\s*/Page(?!s)")
_CONTENTS_RE = re.compile(rb"/Contents\s+(\d+)\s+\d+\s+R")
_KIDS_RE = re.compile(rb"/Kids\s*\[(.*?)\]", re.DOTALL)
_REF_RE = re.compile(rb"(\d+)\s+\d+\s+R")

_ESCAPES = {b"n": b"\n", b"r": b"\r", b"t": b"\t", b"b": b"\b",
            b"f": b"\f", b"(": b"(", b")": b")", b"\\": b"\\"}


def _decode_literal(raw: bytes) -> bytes:
    out = bytearray()
    i = 0
    while i < len(raw):
        ch = raw[i:i + 1]
        if ch != b"\\":
            out += ch
            i += 1
            continue
        nxt = raw[i + 1:i + 2]
        if nxt in _ESCAPES:
            out += _ESCAPES[nxt]
            i += 2
        elif nxt.isdigit():
            run = raw[i + 1:i + 4]
            digits = re.match(rb"[0-7]{1,3}", run).group(0)
            out.append(int(digits, 8) & 0xFF)
            i += 1 + len(digits)
        elif nxt in (b"\n", b"\r"):
            i += 2
        else:
            i += 1
    return bytes(out)


def _shown_strings(content: bytes) -> str:
    """Collect text from Tj/TJ/quote operators, one line per BT block."""
    lines: list[str] = []
    current: list[str] = []
    i = 0
    n = len(content)
    while i < n:
        ch = content[i:i + 1]
        if ch == b"(":
            depth = 1
            j = i + 1
            start = j
            buf = bytearray()
            while j < n and depth:
                cj = content[j:j + 1]
                if cj == b"\\":
                    buf += content[j:j + 2]
                    j += 2
                    continue
                if cj == b"(":
                    depth += 1
                elif cj == b")":
                    depth -= 1
                    if depth == 0:
                        break
                buf += cj
                j += 1
            current.append(_decode_literal(bytes(buf)).decode("latin-1"))
            i = j + 1
        elif ch == b"<" and content[i + 1:i + 2] != b"<":
            j = content.find(b">", i)
            if j == -1:
                break
            hexdigits = re.sub(rb"\s", b"", content[i + 1:j])
            if len(hexdigits) % 2:
                hexdigits += b"0"
            try:
                current.append(bytes.fromhex(hexdigits.decode("ascii")).decode("latin-1"))
            except ValueError:
                pass
            i = j + 1
        elif content[i:i + 2] == b"ET":
            if current:
                lines.append("".join(current))
                current = []
            i += 2
        else:
            i += 1
    if current:
        lines.append("".join(current))
    return "\n".join(line for line in lines if line.strip())


_FILTER_NAME_RE = re.compile(rb"/(\w+)")


def _inflate(dict_bytes: bytes, stream: bytes) -> Optional[bytes]:
    """Run the stream through its declared filter chain; None = unsupported."""
    filter_match = re.search(rb"/Filter\s*(\[[^\]]*\]|/\w+)", dict_bytes)
    if filter_match is None:
        return stream
    names = [name.decode("ascii")
             for name in _FILTER_NAME_RE.findall(filter_match.group(1))]
    data = stream
    for name in names:
        try:
            if name == "FlateDecode":
                data = zlib.decompress(data)
            elif name == "ASCII85Decode":
                cleaned = re.sub(rb"\s", b"", data)
                if cleaned.endswith(b"~>"):
                    cleaned = cleaned[:-2]
                data = base64.a85decode(cleaned)
            elif name == "ASCIIHexDecode":
                cleaned = re.sub(rb"[\s>]", b"", data)
                if len(cleaned) % 2:
                    cleaned += b"0"
                data = bytes.fromhex(cleaned.decode("ascii"))
            else:
                return None
        except (zlib.error, ValueError):
            return None
    return data


def parse_pdf_bytes(data: bytes) -> ParsedDocument:
    if not data.startswith(b"%PDF"):
        raise CorruptFile("missing %PDF header")
    objects: dict[int, tuple[bytes, Optional[bytes]]] = {}
    for match in _OBJ_RE.finditer(data):
        num = int(match.group(1))
        body = match.group(2)
        stream_match = _STREAM_RE.search(body)
        stream = stream_match.group(1) if stream_match else None
        head = body[:stream_match.start()] if stream_match else body
        objects[num] = (head, stream)
    if not objects:
        raise CorruptFile("no readable objects in PDF")

    page_ids = [num for num, (head, _) in objects.items() if _PAGE_RE.search(head)]
    # Order pages by the page-tree Kids array when one is present.
    ordered: list[int] = []
    for head, _ in objects.values():
        kids = _KIDS_RE.search(head)
        if kids and b"/Type" in head and b"/Pages" in head:
            for ref in _REF_RE.finditer(kids.group(1)):
                ref_id = int(ref.group(1))
                if ref_id in page_ids and ref_id not in ordered:
                    ordered.append(ref_id)
    for num in sorted(page_ids):
        if num not in ordered:
            ordered.append(num)

    pages: list[str] = []
    for page_id in ordered:
        head, _ = objects[page_id]
        page_text_parts = []
        for contents in _CONTENTS_RE.finditer(head):
            ref = int(contents.group(1))
            if ref not in objects:
                continue
            obj_head, stream = objects[ref]
            if stream is None:
                continue
            inflated = _inflate(obj_head, stream)
            if inflated is not None:
                page_text_parts.append(_shown_strings(inflated))
        pages.append("\n".join(part for part in page_text_parts if part))

    if not pages:
        # No page tree recognized; fall back to any stream that shows text.
        for _, (head, stream) in sorted(objects.items()):
            if stream is None:
                continue
            inflated = _inflate(head, stream)
            if inflated and b"BT" in inflated:
                pages.append(_shown_strings(inflated))
    text = "\n".join(page for page in pages if page)
    return ParsedDocument(kind="pdf", text=text, pages=pages or [text])


# --- OOXML -------------------------------------------------------------

def _read_zip_xml(archive: zipfile.ZipFile, name: str) -> Optional[ET.Element]:
    try:
        with archive.open(name) as fh:
            return ET.parse(fh).getroot()
    except KeyError:
        return None
    except ET.ParseError as exc:
        raise CorruptFile(f"malformed XML part {name}: {exc}") from exc


def _parse_docx(archive: zipfile.ZipFile) -> ParsedDocument:
    root = _read_zip_xml(archive, "word/document.xml")
    if root is None:
        raise CorruptFile("docx archive lacks word/document.xml")
    paragraphs = []
    for para in root.iter(f"{_WORD_NS}p"):
        runs = []
        for node in para.iter():
            if node.tag == f"{_WORD_NS}t" and node.text:
                runs.append(node.text)
            elif node.tag == f"{_WORD_NS}tab":
                runs.append("\t")
            elif node.tag == f"{_WORD_NS}br":
                runs.append("\n")
        paragraphs.append("".join(runs))
    text = "\n".join(paragraphs).strip("\n")
    return ParsedDocument(kind="docx", text=text, pages=[text])


def _column_index(cell_ref: str) -> int:
    letters = "".join(ch for ch in cell_ref if ch.isalpha())
    index = 0
    for ch in letters:
        index = index * 26 + (ord(ch.upper()) - ord("A") + 1)
    return max(index - 1, 0)


def _parse_xlsx(archive: zipfile.ZipFile) -> ParsedDocument:
    shared: list[str] = []
    strings_root = _read_zip_xml(archive, "xl/sharedStrings.xml")
    if strings_root is not None:
        for item in strings_root.iter(f"{_SHEET_NS}si"):
            shared.append("".join(node.text or "" for node in item.iter(f"{_SHEET_NS}t")))

    sheet_names = sorted(
        name for name in archive.namelist()
        if re.fullmatch(r"xl/worksheets/sheet\d+\.xml", name)
    )
    if not sheet_names:
        raise CorruptFile("xlsx archive has no worksheets")

    sheets: list[str] = []
    first_grid: Optional[list[list[str]]] = None
    for sheet_name in sheet_names:
        root = _read_zip_xml(archive, sheet_name)
        grid: list[list[str]] = []
        for row in root.iter(f"{_SHEET_NS}row"):
            cells: list[str] = []
            for cell in row.iter(f"{_SHEET_NS}c"):
                col = _column_index(cell.get("r", ""))
                while len(cells) < col:
                    cells.append("")
                ctype = cell.get("t", "n")
                if ctype == "inlineStr":
                    value = "".join(node.text or ""
                                    for node in cell.iter(f"{_SHEET_NS}t"))
                else:
                    node = cell.find(f"{_SHEET_NS}v")
                    value = node.text if node is not None and node.text else ""
                    if ctype == "s" and value:
                        value = shared[int(value)]
                cells.append(value)
            grid.append(cells)
        if first_grid is None:
            first_grid = grid
        sheets.append("\n".join("\t".join(row) for row in grid))
    text = "\n\n".join(sheets)
    return ParsedDocument(kind="xlsx", text=text, pages=sheets, table=first_grid)


def _parse_pptx(archive: zipfile.ZipFile) -> ParsedDocument:
    slide_names = sorted(
        (name for name in archive.namelist()
         if re.fullmatch(r"ppt/slides/slide\d+\.xml", name)),
        key=lambda name: int(re.search(r"(\d+)\.xml$", name).group(1)),
    )
    if not slide_names:
        raise CorruptFile("pptx archive has no slides")
    slides: list[str] = []
    for slide_name in slide_names:
        root = _read_zip_xml(archive, slide_name)
        paragraphs = []
        for para in root.iter(f"{_DRAW_NS}p"):
            runs = [node.text or "" for node in para.iter(f"{_DRAW_NS}t")]
            if any(runs):
                paragraphs.append("".join(runs))
        slides.append("\n".join(paragraphs))
    text = "\n\n".join(slides)
    return ParsedDocument(kind="pptx", text=text, pages=slides)


# --- dispatch ----------------------------------------------------------

def _parse_zip(path: str) -> ParsedDocument:
    try:
        archive = zipfile.ZipFile(path)
    except zipfile.BadZipFile as exc:
        raise CorruptFile(f"unreadable zip container: {exc}") from exc
    with archive:
        names = set(archive.namelist())
        if "word/document.xml" in names:
            return _parse_docx(archive)
        if "xl/workbook.xml" in names:
            return _parse_xlsx(archive)
        if "ppt/presentation.xml" in names:
            return _parse_pptx(archive)
    raise UnsupportedType("zip container is not a docx, xlsx, or pptx file")


def parse_document(path: str) -> ParsedDocument:
    """Parse a document file into text, sniffing the container first.

    Content detection (PDF header, zip container contents) wins over the
    file extension; extensions only decide the plain-text fallback.
    Raises UnsupportedType for unknown formats and CorruptFile when a
    recognized container cannot be read.
    """
    if not os.path.exists(path):
        raise CorruptFile(f"no such file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head.startswith(b"%PDF"):
        with open(path, "rb") as fh:
            return parse_pdf_bytes(fh.read())
    if head.startswith(b"PK\x03\x04"):
        return _parse_zip(path)

    ext = os.path.splitext(path)[1].lower()
    if ext == ".pdf" or ext in (".docx", ".xlsx", ".pptx"):
        raise CorruptFile(f"{ext} extension but the container is unreadable")
    if ext in _PLAIN_EXTENSIONS or not head:
        with open(path, "rb") as fh:
            data = fh.read()
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UnsupportedType(f"{path} is not UTF-8 text") from exc
        return ParsedDocument(kind="plain", text=text, pages=[text])
    # Unknown extension: accept clean UTF-8 text, reject binaries.
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedType(f"unrecognized file format: {path}") from exc
    if "\x00" in text:
        raise UnsupportedType(f"unrecognized binary format: {path}")
    return ParsedDocument(kind="plain", text=text, pages=[text])
