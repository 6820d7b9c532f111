"""Benchmark dataset loading, validation, and distribution statistics.

The native container is JSONL: one question object per line, snake_case
field names, with attached source files in a sidecar assets directory.
A converter ingests the vertical CSV layout (one column per question,
one row per field) used for question submission.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from clio.errors import EmptyDataset, MalformedFile

ANSWER_TYPES = ("exactMatch", "multipleChoice")

EVALUATION_DIMENSIONS = (
    "Bibliographic Retrieval",
    "Source Identification",
    "Source Processing",
    "Historical Analysis",
    "Interdisciplinary Integration",
    "Cultural Contextualization",
)

# Divider between acceptable gold-answer alternates.
GOLD_ALTERNATE_DIVIDER = "/"

# Option labels like "A.", "B)", "(C)", "1.", "2)" mark an enumerable choice.
_OPTION_RE = re.compile(
    r"(?:^|[\s(])([A-Ha-h]|\d{1,2})[.)]\s+\S", re.MULTILINE)


@dataclass
class Question:
    id: str
    answer_type: str
    prompt: str
    gold_answer: str
    difficulty: int
    data_files: list[str] = field(default_factory=list)
    data_type: str = "none"
    answer_explanation: str = ""
    source_materials: str = ""
    thematic_category: str = ""
    evaluation_dimensions: list[str] = field(default_factory=list)
    language: str = ""
    contributor: dict = field(default_factory=dict)

    def gold_alternates(self) -> list[str]:
        """Acceptable gold answers, split on the alternate divider."""
        parts = [part.strip()
                 for part in self.gold_answer.split(GOLD_ALTERNATE_DIVIDER)]
        return [part for part in parts if part] or [self.gold_answer.strip()]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "answer_type": self.answer_type,
            "prompt": self.prompt,
            "gold_answer": self.gold_answer,
            "difficulty": self.difficulty,
            "data_files": list(self.data_files),
            "data_type": self.data_type,
            "answer_explanation": self.answer_explanation,
            "source_materials": self.source_materials,
            "thematic_category": self.thematic_category,
            "evaluation_dimensions": list(self.evaluation_dimensions),
            "language": self.language,
            "contributor": dict(self.contributor),
        }


def count_options(prompt: str) -> int:
    """Number of distinct enumerable option labels in a prompt."""
    labels = {match.group(1).upper() for match in _OPTION_RE.finditer(prompt)}
    return len(labels)


def validate_question(record: dict) -> list[str]:
    """Field-level invariant violations for one raw record; empty = valid."""
    problems = []
    if not record.get("id"):
        problems.append("id: missing")
    if record.get("answer_type") not in ANSWER_TYPES:
        problems.append(
            f"answer_type: must be one of {ANSWER_TYPES}, "
            f"got {record.get('answer_type')!r}")
    if not record.get("prompt", "").strip():
        problems.append("prompt: missing")
    if not str(record.get("gold_answer", "")).strip():
        problems.append("gold_answer: missing")
    difficulty = record.get("difficulty")
    if difficulty not in (1, 2, 3):
        problems.append(f"difficulty: must be 1, 2, or 3, got {difficulty!r}")
    if record.get("answer_type") == "multipleChoice":
        if count_options(record.get("prompt", "")) < 2:
            problems.append("prompt: multipleChoice needs >= 2 enumerable options")
    if record.get("data_type") == "file" and not record.get("data_files"):
        problems.append("data_files: required when data_type is file")
    dims = record.get("evaluation_dimensions", [])
    unknown = [dim for dim in dims if dim not in EVALUATION_DIMENSIONS]
    if unknown:
        problems.append(f"evaluation_dimensions: unknown {unknown}")
    return problems


class LoadedDataset(list):
    """Valid questions, with the rejection report attached."""

    def __init__(self, questions, rejections):
        super().__init__(questions)
        self.rejections: list[dict] = rejections


def _question_from_record(record: dict) -> Question:
    return Question(
        id=str(record["id"]),
        answer_type=record["answer_type"],
        prompt=record["prompt"],
        gold_answer=str(record["gold_answer"]),
        difficulty=int(record["difficulty"]),
        data_files=list(record.get("data_files", [])),
        data_type=record.get("data_type", "none"),
        answer_explanation=record.get("answer_explanation", ""),
        source_materials=record.get("source_materials", ""),
        thematic_category=record.get("thematic_category", ""),
        evaluation_dimensions=list(record.get("evaluation_dimensions", [])),
        language=record.get("language", ""),
        contributor=dict(record.get("contributor", {})),
    )


def load_dataset(path: str) -> LoadedDataset:
    """Load and validate a JSONL dataset.

    Invalid records land in the returned dataset's rejection report with
    field-level reasons instead of aborting the load. A file yielding no
    valid questions raises EmptyDataset; an unreadable file raises
    MalformedFile.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise MalformedFile(f"cannot read dataset {path}: {exc}") from exc

    questions: list[Question] = []
    rejections: list[dict] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            rejections.append({"line": lineno, "id": None,
                               "reasons": [f"json: {exc.msg}"]})
            continue
        if not isinstance(record, dict):
            rejections.append({"line": lineno, "id": None,
                               "reasons": ["record: not an object"]})
            continue
        reasons = validate_question(record)
        record_id = str(record.get("id", ""))
        if record_id and record_id in seen_ids:
            reasons.append(f"id: duplicate {record_id!r}")
        if reasons:
            rejections.append({"line": lineno, "id": record.get("id"),
                               "reasons": reasons})
            continue
        seen_ids.add(record_id)
        questions.append(_question_from_record(record))

    if not questions:
        detail = f" ({len(rejections)} records rejected)" if rejections else ""
        raise EmptyDataset(f"no valid questions in {path}{detail}")
    return LoadedDataset(questions, rejections)


# Row labels of the vertical submission format -> our field names.
_VERTICAL_FIELDS = {
    "id": "id",
    "question id": "id",
    "answer type": "answer_type",
    "question": "prompt",
    "data requirements": "source_materials_hint",
    "data requirement": "source_materials_hint",
    "data type": "data_type",
    "difficulty level": "difficulty",
    "answer": "gold_answer",
    "answer explanation": "answer_explanation",
    "source materials": "source_materials",
    "thematic category": "thematic_category",
    "evaluation criteria": "evaluation_criteria",
    "language": "language",
    "contributor's name": "contributor_name",
    "contributor's affiliation": "contributor_affiliation",
}

_ANSWER_TYPE_ALIASES = {
    "multiple choice": "multipleChoice",
    "multiplechoice": "multipleChoice",
    "exact match": "exactMatch",
    "exactmatch": "exactMatch",
}

_LEVEL_RE = re.compile(r"level\s*(\d)", re.IGNORECASE)


def import_vertical_csv(path: str) -> list[dict]:
    """Convert the vertical CSV submission layout into raw JSONL records.

    Column 0 holds field labels; each further column is one question.
    Difficulty comes from a "Difficulty Level" row or a "(Level N)"
    annotation in the header. Records are returned unvalidated so the
    caller can route them through the same rejection reporting as JSONL.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, csv.Error) as exc:
        raise MalformedFile(f"cannot read CSV {path}: {exc}") from exc
    if not rows or len(rows[0]) < 2:
        raise MalformedFile(f"{path} is not a vertical-format CSV")

    header = rows[0]
    columns = len(header)
    records: list[dict] = []
    for col in range(1, columns):
        raw: dict[str, str] = {}
        for row in rows:
            if not row or not row[0].strip():
                continue
            label = row[0].strip().lower()
            fieldname = _VERTICAL_FIELDS.get(label)
            if fieldname and col < len(row):
                raw[fieldname] = row[col].strip()

        record: dict = {
            "id": raw.get("id", header[col].strip()),
            "prompt": raw.get("prompt", ""),
            "gold_answer": raw.get("gold_answer", ""),
            "answer_explanation": raw.get("answer_explanation", ""),
            "source_materials": raw.get("source_materials",
                                        raw.get("source_materials_hint", "")),
            "thematic_category": raw.get("thematic_category", ""),
            "language": raw.get("language", ""),
            "data_files": [],
            "data_type": raw.get("data_type", "none") or "none",
        }
        answer_type = raw.get("answer_type", "").strip().lower()
        record["answer_type"] = _ANSWER_TYPE_ALIASES.get(answer_type,
                                                         raw.get("answer_type", ""))
        level_text = raw.get("difficulty", "") or header[col]
        level_match = _LEVEL_RE.search(level_text)
        if level_match:
            record["difficulty"] = int(level_match.group(1))
        elif raw.get("difficulty", "").strip().isdigit():
            record["difficulty"] = int(raw["difficulty"])
        criteria = raw.get("evaluation_criteria", "")
        if criteria:
            dims = [dim.strip() for dim in re.split(r"[;,]", criteria)]
            record["evaluation_dimensions"] = [
                dim for dim in dims if dim in EVALUATION_DIMENSIONS]
        contributor = {}
        if raw.get("contributor_name"):
            contributor["name"] = raw["contributor_name"]
        if raw.get("contributor_affiliation"):
            contributor["affiliation"] = raw["contributor_affiliation"]
        record["contributor"] = contributor
        records.append(record)
    return records


def _modality_of(question: Question) -> str:
    if question.data_type != "file" or not question.data_files:
        return "text"
    from clio.agents import media_type_of
    majors = {media_type_of(path).split("/")[0] for path in question.data_files}
    if majors <= {"text", "application"}:
        return "document"
    if len(majors) > 1:
        return "mixed"
    major = majors.pop()
    return {"image": "image", "audio": "audio", "video": "video"}.get(
        major, "document")


def dataset_stats(questions: list[Question]) -> dict[str, dict]:
    """Distribution tables over the loaded questions.

    Returns {dimension: {value: count}} for language, modality, and
    difficulty (plus period when any question carries one in its
    thematic metadata). Counts in each table sum to len(questions).
    """
    if not questions:
        raise EmptyDataset("dataset_stats needs at least one question")
    language = Counter(q.language or "Unspecified" for q in questions)
    modality = Counter(_modality_of(q) for q in questions)
    difficulty = Counter(f"Level {q.difficulty}" for q in questions)
    tables = {
        "language": dict(language.most_common()),
        "modality": dict(modality.most_common()),
        "difficulty": dict(sorted(difficulty.items())),
    }
    period = Counter()
    unperiodized = 0
    for question in questions:
        match = re.search(r"\b(\d{1,2}th century|antiquity|medieval|modern)\b",
                          question.thematic_category, re.IGNORECASE)
        if match:
            period[match.group(1).lower()] += 1
        else:
            unperiodized += 1
    if period:
        # Keep the partition property: every question lands in a bucket.
        if unperiodized:
            period["unspecified"] = unperiodized
        tables["period"] = dict(period.most_common())
    return tables
