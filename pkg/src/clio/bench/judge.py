"""LLM judging of benchmark responses against gold answers.

The rubric prompt lives at assets/judge_prompt.txt and is used verbatim:
instantiation is plain placeholder substitution, never reformatting, so
the committed template stays the single source of truth for judging
semantics. Replies come back as four labeled lines which are parsed
leniently; anything unparseable counts as incorrect rather than crashing
a benchmark run.
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass

from clio.errors import BackendError

# Marker stored when the judge reply had no extractable answer.
NONE_MARKER = "None"

_TEMPLATE_CACHE: dict[str, str] = {}


def judge_prompt_template() -> str:
    """The committed rubric template, read once and cached."""
    if "template" not in _TEMPLATE_CACHE:
        resource = importlib.resources.files("clio.bench").joinpath(
            "assets", "judge_prompt.txt")
        _TEMPLATE_CACHE["template"] = resource.read_text(encoding="utf-8")
    return _TEMPLATE_CACHE["template"]


def instantiate_judge_prompt(question: str, response: str,
                             correct_answer: str) -> str:
    """Fill the three placeholders by literal substitution.

    str.replace, not str.format: the template and the substituted values
    may contain braces, and nothing else in the text may change.
    """
    prompt = judge_prompt_template()
    prompt = prompt.replace("{question}", question)
    prompt = prompt.replace("{response}", response)
    prompt = prompt.replace("{correct_answer}", correct_answer)
    return prompt


@dataclass
class JudgeVerdict:
    extracted_final_answer: str
    reasoning: str
    correct: str
    confidence: int

    def __post_init__(self):
        if self.correct not in ("yes", "no"):
            raise ValueError(f"correct must be yes or no, got {self.correct!r}")
        if not 0 <= self.confidence <= 100:
            raise ValueError(f"confidence out of range: {self.confidence}")

    def is_correct(self) -> bool:
        return self.correct == "yes"

    def to_dict(self) -> dict:
        return {
            "extracted_final_answer": self.extracted_final_answer,
            "reasoning": self.reasoning,
            "correct": self.correct,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JudgeVerdict":
        return cls(
            extracted_final_answer=data.get("extracted_final_answer",
                                            NONE_MARKER),
            reasoning=data.get("reasoning", ""),
            correct=data.get("correct", "no"),
            confidence=int(data.get("confidence", 100)),
        )


_LABELS = ("extracted_final_answer", "reasoning", "correct", "confidence")
_LABEL_RE = re.compile(
    r"^\s*\**\s*(extracted_final_answer|reasoning|correct|confidence)\s*\**\s*:\s*(.*)$",
    re.IGNORECASE)
_CONFIDENCE_RE = re.compile(r"(\d{1,3})")


def serialize_verdict(verdict: JudgeVerdict) -> str:
    """Render a verdict in the reply format the parser accepts."""
    return (
        f"extracted_final_answer: {verdict.extracted_final_answer}\n"
        f"reasoning: {verdict.reasoning}\n"
        f"correct: {verdict.correct}\n"
        f"confidence: {verdict.confidence}"
    )


def parse_verdict(reply: str) -> JudgeVerdict:
    """Parse a judge reply into a verdict; never raises.

    Missing confidence defaults to 100. A reply without a recognizable
    correct: line yields correct = no with a parse-failure note in the
    reasoning field, so malformed judging degrades to incorrect instead
    of aborting.
    """
    fields: dict[str, list[str]] = {}
    current = None
    for line in (reply or "").splitlines():
        match = _LABEL_RE.match(line)
        if match:
            current = match.group(1).lower()
            fields[current] = [match.group(2)]
        elif current:
            fields[current].append(line)
    values = {label: "\n".join(parts).strip()
              for label, parts in fields.items()}

    correct = values.get("correct", "").strip().strip(".'\"").lower()
    if correct.startswith("yes"):
        correct = "yes"
    elif correct.startswith("no"):
        correct = "no"
    else:
        note = "parse failure: no correct yes/no line in judge reply"
        reasoning = values.get("reasoning", "")
        reasoning = f"{reasoning}\n{note}".strip() if reasoning else note
        return JudgeVerdict(
            extracted_final_answer=values.get("extracted_final_answer",
                                              NONE_MARKER) or NONE_MARKER,
            reasoning=reasoning, correct="no", confidence=100)

    confidence = 100
    if "confidence" in values:
        match = _CONFIDENCE_RE.search(values["confidence"])
        if match:
            confidence = max(0, min(100, int(match.group(1))))
    return JudgeVerdict(
        extracted_final_answer=values.get("extracted_final_answer",
                                          NONE_MARKER) or NONE_MARKER,
        reasoning=values.get("reasoning", ""),
        correct=correct,
        confidence=confidence,
    )


def _has_labels(reply: str) -> bool:
    return any(_LABEL_RE.match(line) for line in (reply or "").splitlines())


def judge_response(question_text: str, response_text: str, gold_answer: str,
                   judge_backend, alternates: list[str] = ()) -> JudgeVerdict:
    """Judge one response against the gold answer (alternates joined by OR).

    The backend reply is parsed into the four labeled fields; a reply with
    none of them is retried once, and a second failure is recorded as
    correct = no with a parse-failure note.
    """
    if not response_text:
        raise ValueError("response_text must be non-empty")
    gold = gold_answer
    alternates = [alt for alt in alternates if alt and alt != gold_answer]
    if alternates:
        gold = " OR ".join([gold_answer] + alternates)
    prompt = instantiate_judge_prompt(question_text, response_text, gold)
    reply = judge_backend.complete(prompt, temperature=0.0)
    if not _has_labels(reply):
        reply = judge_backend.complete(prompt, temperature=0.0)
    return parse_verdict(reply)


def judge_question(question, response_text: str, judge_backend) -> JudgeVerdict:
    """judge_response wired to a Question's prompt and gold alternates."""
    alternates = question.gold_alternates()
    return judge_response(question.prompt, response_text, alternates[0],
                          judge_backend, alternates=alternates[1:])
