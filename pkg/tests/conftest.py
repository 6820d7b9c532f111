import json
import os
import struct
import wave
import zipfile

import pytest

from clio.backends import (
    ScriptedModelBackend,
    StaticFetchBackend,
    StaticSearchBackend,
    offline_backends,
)
from clio.bench.dataset import Question

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
REPLAY_BUNDLE = os.path.join(FIXTURE_DIR, "benchmark_replay")


@pytest.fixture
def question():
    return Question(
        id="Q001",
        answer_type="multipleChoice",
        prompt=("In which year was the Peace of Westphalia signed? "
                "(A) 1618 (B) 1648 (C) 1659 (D) 1689"),
        gold_answer="1648",
        difficulty=1,
        language="English",
    )


@pytest.fixture
def exact_question():
    return Question(
        id="Q002",
        answer_type="exactMatch",
        prompt="Who engraved the woodcuts of the 1542 herbal?",
        gold_answer="Veit Rudolph Speckle / Veit Rudolf Specklin",
        difficulty=2,
        language="English",
    )


def planner_replies(*steps):
    """JSON planner replies from (action, arguments, rationale) triples."""
    return [json.dumps({"action": action, "arguments": arguments,
                        "rationale": rationale})
            for action, arguments, rationale in steps]


@pytest.fixture
def scripted_session_backends():
    """Backends for a two-step session: one search hit, one page."""
    replies = planner_replies(
        ("web_search", {"query": "peace of westphalia year"},
         "Find the treaty year."),
        ("final_answer", {"answer": "1648"},
         "The snippet names 1648."),
    )
    search = StaticSearchBackend({"peace of westphalia year": [{
        "title": "Peace of Westphalia",
        "url": "https://example.org/westphalia",
        "snippet": "The Peace of Westphalia was signed in 1648.",
    }]})
    fetch = StaticFetchBackend({
        "https://example.org/westphalia":
            "<html><head><title>Peace of Westphalia</title></head><body>"
            "<p>The Peace of Westphalia was signed in 1648.</p></body></html>",
    })
    return offline_backends(model=ScriptedModelBackend(replies),
                            search=search, fetch=fetch)


def make_pdf(path, pages):
    """Write a small PDF, one text line per page, using reportlab."""
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    doc = canvas.Canvas(str(path), pagesize=letter)
    for line in pages:
        doc.drawString(72, 720, line)
        doc.showPage()
    doc.save()
    return str(path)


def make_docx(path, paragraphs):
    document = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<w:document xmlns:w="http://schemas.openxmlformats.org/'
        'wordprocessingml/2006/main"><w:body>'
        + "".join(f"<w:p><w:r><w:t>{p}</w:t></w:r></w:p>" for p in paragraphs)
        + "</w:body></w:document>")
    with zipfile.ZipFile(str(path), "w") as zf:
        zf.writestr("[Content_Types].xml", "<Types/>")
        zf.writestr("word/document.xml", document)
    return str(path)


def make_xlsx(path, rows):
    ns = 'xmlns="http://schemas.openxmlformats.org/spreadsheetml/2006/main"'
    cells = []
    for r, row in enumerate(rows, start=1):
        row_cells = []
        for c, value in enumerate(row):
            ref = f"{chr(ord('A') + c)}{r}"
            row_cells.append(
                f'<c r="{ref}" t="inlineStr"><is><t>{value}</t></is></c>')
        cells.append(f'<row r="{r}">' + "".join(row_cells) + "</row>")
    sheet = (f'<?xml version="1.0"?><worksheet {ns}><sheetData>'
             + "".join(cells) + "</sheetData></worksheet>")
    workbook = (f'<?xml version="1.0"?><workbook {ns}><sheets>'
                '<sheet name="Sheet1" sheetId="1"/></sheets></workbook>')
    with zipfile.ZipFile(str(path), "w") as zf:
        zf.writestr("xl/workbook.xml", workbook)
        zf.writestr("xl/worksheets/sheet1.xml", sheet)
    return str(path)


def make_pptx(path, slides):
    ns = 'xmlns:a="http://schemas.openxmlformats.org/drawingml/2006/main"'
    with zipfile.ZipFile(str(path), "w") as zf:
        zf.writestr("ppt/presentation.xml", "<presentation/>")
        for index, lines in enumerate(slides, start=1):
            body = "".join(
                f"<a:p><a:r><a:t>{line}</a:t></a:r></a:p>" for line in lines)
            zf.writestr(f"ppt/slides/slide{index}.xml",
                        f'<?xml version="1.0"?><sld {ns}>{body}</sld>')
    return str(path)


def make_wav(path, n_samples=8000, rate=8000):
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(struct.pack("<" + "h" * n_samples,
                                    *([0] * n_samples)))
    return str(path)


def make_image(path, size=(64, 48), color=(200, 30, 30)):
    from PIL import Image

    Image.new("RGB", size, color).save(str(path))
    return str(path)
