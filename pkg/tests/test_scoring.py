"""Answer normalization and pass@k aggregation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clio.bench.dataset import Question
from clio.bench.judge import JudgeVerdict
from clio.bench.scoring import (
    AttemptRecord,
    ScoreReport,
    compute_pass_at_k,
    normalize_answer,
    score_exact_match,
)
from clio.errors import DanglingReference, InconsistentAttempts


# --- normalization -------------------------------------------------------------

@pytest.mark.parametrize("raw,expected", [
    ("  Basel  ", "basel"),
    ("BASEL", "basel"),
    ("Basel.", "basel"),
    ("Basel!?", "basel"),
    ("Veit   Rudolph\tSpeckle", "veit rudolph speckle"),
    ("1,648", "1648"),
    ("12,345.67", "12345.67"),
    ("-1,000", "-1000"),
    ("room 1,000b", "room 1,000b"),
    ("Straße", "strasse"),
])
def test_normalization_pipeline(raw, expected):
    assert normalize_answer(raw) == expected


def test_comma_stripping_only_for_pure_numbers():
    # Commas survive inside prose answers.
    assert normalize_answer("Fust, Peter") == "fust, peter"
    assert normalize_answer("1,648") == "1648"


def test_exact_match_scores_after_normalization():
    assert score_exact_match(" 1,648. ", "1648")
    assert score_exact_match("BASEL", "basel")
    assert not score_exact_match("Bern", "Basel")


@given(st.text(max_size=120))
def test_normalization_is_idempotent(text):
    once = normalize_answer(text)
    assert normalize_answer(once) == once


# --- attempt records -------------------------------------------------------------

def verdict(correct="yes"):
    return JudgeVerdict("x", "r", correct, 90)


def attempt(qid, index, correct="yes", override=None):
    return AttemptRecord(question_id=qid, attempt_index=index,
                         response_text="x", verdict=verdict(correct),
                         manual_override=override)


def question(qid, difficulty=1):
    return Question(id=qid, answer_type="exactMatch", prompt="p?",
                    gold_answer="a", difficulty=difficulty,
                    language="English")


def test_attempt_record_round_trips():
    record = attempt("Q1", 2, "no", override=True)
    restored = AttemptRecord.from_dict(record.to_dict())
    assert restored == record


# --- pass@k ------------------------------------------------------------------------

def test_pass_at_1_counts_first_attempts_only():
    questions = [question("Q1"), question("Q2")]
    attempts = [attempt("Q1", 1, "no"), attempt("Q1", 2, "yes"),
                attempt("Q2", 1, "yes"), attempt("Q2", 2, "no")]
    report = compute_pass_at_k(attempts, questions, k=1)
    assert report.overall == 0.5
    report2 = compute_pass_at_k(attempts, questions, k=2)
    assert report2.overall == 1.0


def test_per_level_breakdown_and_counts():
    questions = [question("Q1", 1), question("Q2", 1),
                 question("Q3", 2), question("Q4", 3)]
    attempts = [attempt("Q1", 1, "yes"), attempt("Q2", 1, "no"),
                attempt("Q3", 1, "yes"), attempt("Q4", 1, "no")]
    report = compute_pass_at_k(attempts, questions, k=1)
    assert report.per_level == {1: 0.5, 2: 1.0, 3: 0.0}
    assert report.counts == {1: (1, 2), 2: (1, 1), 3: (0, 1)}
    assert report.overall == 0.5


def test_question_without_attempts_scores_zero():
    questions = [question("Q1"), question("Q2")]
    attempts = [attempt("Q1", 1, "yes")]
    report = compute_pass_at_k(attempts, questions, k=1)
    assert report.overall == 0.5
    assert report.counts[1] == (1, 2)


def test_gapped_attempt_indexes_are_rejected():
    questions = [question("Q1")]
    attempts = [attempt("Q1", 1), attempt("Q1", 3)]
    with pytest.raises(InconsistentAttempts) as exc_info:
        compute_pass_at_k(attempts, questions, k=1)
    assert "contiguous" in str(exc_info.value)


def test_indexes_must_start_at_one():
    questions = [question("Q1")]
    with pytest.raises(InconsistentAttempts):
        compute_pass_at_k([attempt("Q1", 2)], questions, k=1)


def test_short_attempt_lists_need_allow_short():
    questions = [question("Q1")]
    attempts = [attempt("Q1", 1, "yes")]
    with pytest.raises(InconsistentAttempts):
        compute_pass_at_k(attempts, questions, k=3)
    report = compute_pass_at_k(attempts, questions, k=3, allow_short=True)
    assert report.overall == 1.0


def test_attempts_for_unknown_questions_are_dangling():
    with pytest.raises(DanglingReference):
        compute_pass_at_k([attempt("GHOST", 1)], [question("Q1")], k=1)


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        compute_pass_at_k([], [question("Q1")], k=0)


def test_manual_override_is_recorded_but_never_consulted():
    questions = [question("Q1"), question("Q2")]
    attempts = [attempt("Q1", 1, "no", override=True),
                attempt("Q2", 1, "yes", override=False)]
    report = compute_pass_at_k(attempts, questions, k=1)
    # Judge-only accuracy: the overrides would have flipped both.
    assert report.overall == 0.5
    assert report.counts[1] == (1, 2)
    assert attempts[0].to_dict()["manual_override"] is True


def test_report_dict_exposes_fractions_and_percentages():
    report = ScoreReport(k=2, per_level={1: 0.5, 3: 0.0}, overall=0.275,
                         counts={1: (1, 2), 3: (0, 2)})
    data = report.to_dict()
    assert data["overall"] == 0.275
    assert data["overall_percent"] == 27.5
    assert data["per_level"] == {"1": 0.5, "3": 0.0}
    assert data["per_level_percent"] == {"1": 50.0, "3": 0.0}
    assert data["counts"]["1"] == {"correct": 1, "total": 2}


def _brute_force_pass_at_k(attempts, questions, k):
    """Reference: per question, correct iff any judged-yes among the
    first k attempt indexes."""
    outcome = {}
    for q in questions:
        rows = [a for a in attempts
                if a.question_id == q.id and a.attempt_index <= k]
        outcome[q.id] = any(a.verdict.is_correct() for a in rows)
    per_level: dict[int, list[int]] = {}
    for q in questions:
        bucket = per_level.setdefault(q.difficulty, [0, 0])
        bucket[1] += 1
        bucket[0] += int(outcome[q.id])
    total_correct = sum(v[0] for v in per_level.values())
    total = sum(v[1] for v in per_level.values())
    return (total_correct / total,
            {level: c / t for level, (c, t) in per_level.items()})


@settings(max_examples=80, deadline=None)
@given(data=st.data(),
       n_questions=st.integers(min_value=1, max_value=10),
       k=st.integers(min_value=1, max_value=4))
def test_pass_at_k_matches_brute_force(data, n_questions, k):
    questions = [
        question(f"Q{i}", difficulty=data.draw(
            st.sampled_from([1, 2, 3]), label=f"level{i}"))
        for i in range(n_questions)]
    attempts = []
    for q in questions:
        for index in range(1, k + 1):
            correct = data.draw(st.booleans(), label=f"{q.id}a{index}")
            attempts.append(attempt(q.id, index, "yes" if correct else "no"))
    report = compute_pass_at_k(attempts, questions, k=k)
    expected_overall, expected_levels = _brute_force_pass_at_k(
        attempts, questions, k)
    assert report.overall == pytest.approx(expected_overall)
    for level, expected in expected_levels.items():
        assert report.per_level[level] == pytest.approx(expected)


@settings(max_examples=40, deadline=None)
@given(data=st.data(), n_questions=st.integers(min_value=1, max_value=8))
def test_pass_at_k_is_monotone_in_k(data, n_questions):
    questions = [question(f"Q{i}") for i in range(n_questions)]
    attempts = []
    for q in questions:
        for index in range(1, 5):
            correct = data.draw(st.booleans(), label=f"{q.id}a{index}")
            attempts.append(attempt(q.id, index, "yes" if correct else "no"))
    scores = [compute_pass_at_k(attempts, questions, k=k).overall
              for k in range(1, 5)]
    assert scores == sorted(scores)
