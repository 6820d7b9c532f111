"""Accuracy scoring: exact-match normalization and pass@k aggregation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from clio.bench.judge import JudgeVerdict
from clio.errors import DanglingReference, InconsistentAttempts

_TERMINAL_PUNCTUATION = ".,;:!?"
_PURE_NUMBER_RE = re.compile(r"-?[\d,]+(?:\.\d+)?")


def normalize_answer(text: str) -> str:
    """The committed normalization pipeline, applied in this order:
    trim, casefold, strip terminal punctuation, collapse whitespace,
    strip thousands separators when the whole string is a number."""
    out = text.strip()
    out = out.casefold()
    out = out.rstrip(_TERMINAL_PUNCTUATION).rstrip()
    out = " ".join(out.split())
    if _PURE_NUMBER_RE.fullmatch(out):
        out = out.replace(",", "")
    return out


def score_exact_match(prediction: str, gold: str) -> bool:
    """Pure string comparison after normalization."""
    return normalize_answer(prediction) == normalize_answer(gold)


@dataclass
class AttemptRecord:
    question_id: str
    attempt_index: int
    response_text: str
    verdict: JudgeVerdict
    run_result_ref: str = ""
    # Human-review column; recorded but never consulted by the scorer,
    # which reports judge-only accuracy.
    manual_override: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "attempt_index": self.attempt_index,
            "response_text": self.response_text,
            "verdict": self.verdict.to_dict(),
            "run_result_ref": self.run_result_ref,
            "manual_override": self.manual_override,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttemptRecord":
        return cls(
            question_id=str(data["question_id"]),
            attempt_index=int(data["attempt_index"]),
            response_text=data.get("response_text", ""),
            verdict=JudgeVerdict.from_dict(data["verdict"]),
            run_result_ref=data.get("run_result_ref", ""),
            manual_override=data.get("manual_override"),
        )


@dataclass
class ScoreReport:
    k: int
    per_level: dict[int, float] = field(default_factory=dict)
    overall: float = 0.0
    counts: dict[int, tuple[int, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "overall": self.overall,
            "overall_percent": round(self.overall * 100, 3),
            "per_level": {str(level): acc
                          for level, acc in sorted(self.per_level.items())},
            "per_level_percent": {str(level): round(acc * 100, 3)
                                  for level, acc in sorted(self.per_level.items())},
            "counts": {str(level): {"correct": correct, "total": total}
                       for level, (correct, total) in sorted(self.counts.items())},
        }


def compute_pass_at_k(attempts: list[AttemptRecord], questions, k: int,
                      allow_short: bool = False) -> ScoreReport:
    """pass@k over judged attempts, per difficulty level and overall.

    A question counts correct iff any of its first k attempts was judged
    yes. Attempt indexes must be contiguous from 1; a question with fewer
    than k attempts raises InconsistentAttempts unless allow_short, which
    scores it over the attempts it has. Attempts naming a question absent
    from the dataset raise DanglingReference.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    by_question: dict[str, list[AttemptRecord]] = {}
    question_ids = {question.id for question in questions}
    for attempt in attempts:
        if attempt.question_id not in question_ids:
            raise DanglingReference(
                f"attempt references unknown question {attempt.question_id!r}")
        by_question.setdefault(attempt.question_id, []).append(attempt)

    for question_id, records in by_question.items():
        records.sort(key=lambda record: record.attempt_index)
        indexes = [record.attempt_index for record in records]
        if indexes != list(range(1, len(records) + 1)):
            raise InconsistentAttempts(
                f"question {question_id}: attempt indexes {indexes} are not "
                f"contiguous from 1")
        if len(records) < k and not allow_short:
            raise InconsistentAttempts(
                f"question {question_id}: {len(records)} attempts present "
                f"but k={k}")

    counts: dict[int, list[int]] = {}
    for question in questions:
        correct_total = counts.setdefault(question.difficulty, [0, 0])
        correct_total[1] += 1
        records = by_question.get(question.id, [])
        if any(record.verdict.is_correct() for record in records[:k]):
            correct_total[0] += 1

    report = ScoreReport(k=k)
    total_correct = 0
    total_questions = 0
    for level, (correct, total) in sorted(counts.items()):
        report.per_level[level] = correct / total if total else 0.0
        report.counts[level] = (correct, total)
        total_correct += correct
        total_questions += total
    report.overall = (total_correct / total_questions) if total_questions else 0.0
    return report
