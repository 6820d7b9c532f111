"""Judging: template fidelity, verdict parsing, and the retry policy."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clio.backends import ScriptedModelBackend
from clio.bench.judge import (
    NONE_MARKER,
    JudgeVerdict,
    instantiate_judge_prompt,
    judge_prompt_template,
    judge_question,
    judge_response,
    parse_verdict,
    serialize_verdict,
)

# --- template fidelity -------------------------------------------------------

def test_instantiation_only_fills_the_placeholders():
    prompt = instantiate_judge_prompt("<<Q>>", "<<R>>", "<<C>>")
    blanked = (prompt.replace("<<Q>>", "{question}")
               .replace("<<R>>", "{response}")
               .replace("<<C>>", "{correct_answer}"))
    assert blanked == judge_prompt_template()


def test_each_placeholder_is_filled_exactly_once():
    prompt = instantiate_judge_prompt("<<Q>>", "<<R>>", "<<C>>")
    for sentinel in ("<<Q>>", "<<R>>", "<<C>>"):
        assert prompt.count(sentinel) == 1
    for placeholder in ("{question}", "{response}", "{correct_answer}"):
        assert placeholder not in prompt


def test_substituted_values_may_contain_braces():
    prompt = instantiate_judge_prompt(
        "What is {x} when x = 1648?", "the answer is {1648}", "{1648}")
    assert "What is {x} when x = 1648?" in prompt
    assert "the answer is {1648}" in prompt


# --- the verdict type ----------------------------------------------------------

def test_verdict_rejects_bad_fields():
    with pytest.raises(ValueError):
        JudgeVerdict("a", "r", "maybe", 50)
    with pytest.raises(ValueError):
        JudgeVerdict("a", "r", "yes", 101)
    with pytest.raises(ValueError):
        JudgeVerdict("a", "r", "no", -1)


def test_verdict_dict_round_trip():
    verdict = JudgeVerdict("Basel", "matches the gold answer", "yes", 85)
    assert JudgeVerdict.from_dict(verdict.to_dict()) == verdict
    assert verdict.is_correct()
    assert not JudgeVerdict("x", "", "no", 100).is_correct()


# --- reply parsing ---------------------------------------------------------------

def test_labeled_reply_parses_to_its_fields():
    reply = ("extracted_final_answer: 1648\n"
             "reasoning: The response names the treaty year.\n"
             "correct: yes\n"
             "confidence: 92")
    verdict = parse_verdict(reply)
    assert verdict.extracted_final_answer == "1648"
    assert verdict.reasoning == "The response names the treaty year."
    assert verdict.correct == "yes"
    assert verdict.confidence == 92


def test_parser_tolerates_markdown_and_case():
    reply = ("**Extracted_Final_Answer**: Basel\n"
             "**Reasoning**: Same city.\n"
             "**Correct**: Yes.\n"
             "**Confidence**: 85%")
    verdict = parse_verdict(reply)
    assert verdict.extracted_final_answer == "Basel"
    assert verdict.correct == "yes"
    assert verdict.confidence == 85


def test_multiline_reasoning_is_gathered():
    reply = ("extracted_final_answer: X\n"
             "reasoning: First line.\n"
             "Second line continues.\n"
             "correct: no\n"
             "confidence: 70")
    verdict = parse_verdict(reply)
    assert verdict.reasoning == "First line.\nSecond line continues."
    assert verdict.correct == "no"


def test_unparseable_reply_degrades_to_incorrect():
    verdict = parse_verdict("The model rambled with no structure at all.")
    assert verdict.correct == "no"
    assert verdict.extracted_final_answer == NONE_MARKER
    assert "parse failure: no correct yes/no line in judge reply" in \
        verdict.reasoning
    assert verdict.confidence == 100


def test_missing_confidence_defaults_to_100():
    verdict = parse_verdict("extracted_final_answer: x\ncorrect: yes")
    assert verdict.confidence == 100


def test_confidence_is_clamped_and_extracted_from_noise():
    assert parse_verdict("correct: yes\nconfidence: 250").confidence == 100
    assert parse_verdict("correct: yes\nconfidence: about 60 or so").confidence == 60
    assert parse_verdict("correct: yes\nconfidence: very high").confidence == 100


def test_empty_extracted_answer_becomes_the_none_marker():
    verdict = parse_verdict("extracted_final_answer:\ncorrect: no")
    assert verdict.extracted_final_answer == NONE_MARKER


@given(st.text(max_size=300))
@settings(max_examples=150)
def test_parser_is_total_over_arbitrary_replies(reply):
    verdict = parse_verdict(reply)
    assert verdict.correct in ("yes", "no")
    assert 0 <= verdict.confidence <= 100
    assert isinstance(verdict.extracted_final_answer, str)


_FIELD_TEXT = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"),
                           whitelist_characters=" "),
    min_size=1, max_size=60,
).map(str.strip).filter(bool)


@given(extracted=_FIELD_TEXT, reasoning=_FIELD_TEXT,
       correct=st.sampled_from(["yes", "no"]),
       confidence=st.integers(min_value=0, max_value=100))
@settings(max_examples=100)
def test_serialize_parse_round_trip(extracted, reasoning, correct, confidence):
    verdict = JudgeVerdict(extracted, reasoning, correct, confidence)
    assert parse_verdict(serialize_verdict(verdict)) == verdict


# --- judging calls ----------------------------------------------------------------

def _verdict_reply(correct="yes", answer="1648"):
    return (f"extracted_final_answer: {answer}\n"
            f"reasoning: checked\ncorrect: {correct}\nconfidence: 90")


def test_judge_response_formats_alternates_with_or():
    backend = ScriptedModelBackend([_verdict_reply()])
    judge_response("Who engraved it?", "Speckle did", "Veit Rudolph Speckle",
                   backend, alternates=["Veit Rudolf Specklin"])
    prompt = backend.calls[0]
    assert ("[correct_answer]: Veit Rudolph Speckle OR Veit Rudolf Specklin"
            in prompt)


def test_single_gold_answer_is_not_rewritten():
    backend = ScriptedModelBackend([_verdict_reply()])
    judge_response("Year?", "1648", "1648", backend)
    assert "[correct_answer]: 1648\n" in backend.calls[0]
    assert " OR " not in backend.calls[0].split("[correct_answer]: ")[1].split("\n")[0]


def test_unlabeled_reply_is_retried_exactly_once():
    backend = ScriptedModelBackend(["no labels here", _verdict_reply()])
    verdict = judge_response("Q?", "resp", "gold", backend)
    assert len(backend.calls) == 2
    assert verdict.correct == "yes"
    assert verdict.extracted_final_answer == "1648"


def test_double_parse_failure_counts_as_incorrect():
    backend = ScriptedModelBackend(["still nothing", "again nothing"])
    verdict = judge_response("Q?", "resp", "gold", backend)
    assert len(backend.calls) == 2
    assert verdict.correct == "no"
    assert "parse failure" in verdict.reasoning


def test_empty_response_is_rejected():
    with pytest.raises(ValueError):
        judge_response("Q?", "", "gold", ScriptedModelBackend([]))


def test_judge_question_wires_prompt_and_gold_alternates(exact_question):
    backend = ScriptedModelBackend([_verdict_reply(answer="Speckle")])
    verdict = judge_question(exact_question, "It was Speckle.", backend)
    prompt = backend.calls[0]
    assert exact_question.prompt in prompt
    assert ("Veit Rudolph Speckle OR Veit Rudolf Specklin") in prompt
    assert verdict.is_correct()
