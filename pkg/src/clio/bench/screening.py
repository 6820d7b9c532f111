"""Pre-evaluation screening: drop questions baseline models already solve.

Each candidate question is posed to a panel of models as bare prompt
text, deliberately without its attached supporting materials, and each
answer is judged against the gold answer. A question is excluded when
strictly more than the threshold number of models get it right.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from clio.bench.judge import judge_response
from clio.errors import BackendError, ScreeningError

DEFAULT_THRESHOLD = 2

KEEP = "keep"
EXCLUDE = "exclude"


@dataclass
class ScreeningOutcome:
    question_id: str
    decision: str
    correct_count: int
    threshold: int
    per_model: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "decision": self.decision,
            "correct_count": self.correct_count,
            "threshold": self.threshold,
            "per_model": list(self.per_model),
        }


def screen_question(question, model_backends: list, judge_backend,
                    threshold: int = DEFAULT_THRESHOLD) -> ScreeningOutcome:
    """Run the screening panel over one question.

    Exclusion requires correct_count strictly greater than threshold.
    A backend failure aborts this question's screening with a retriable
    error; partial panels are never scored.
    """
    if not model_backends:
        raise ValueError("at least one model backend required")
    alternates = question.gold_alternates()
    per_model = []
    correct_count = 0
    for position, backend in enumerate(model_backends):
        name = getattr(backend, "name", f"model-{position}")
        try:
            answer = backend.complete(question.prompt, temperature=0.0)
            verdict = judge_response(question.prompt, answer, alternates[0],
                                     judge_backend,
                                     alternates=alternates[1:])
        except BackendError as exc:
            raise ScreeningError(
                f"screening aborted for {question.id}: {name}: {exc}",
                retriable=True) from exc
        correct = verdict.is_correct()
        correct_count += int(correct)
        per_model.append({"model": name, "answer": answer,
                          "correct": correct})
    decision = EXCLUDE if correct_count > threshold else KEEP
    return ScreeningOutcome(question_id=question.id, decision=decision,
                            correct_count=correct_count, threshold=threshold,
                            per_model=per_model)
