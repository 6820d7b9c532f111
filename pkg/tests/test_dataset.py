"""Dataset loading, validation, CSV import, and distribution stats."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clio.bench.dataset import (
    ANSWER_TYPES,
    EVALUATION_DIMENSIONS,
    Question,
    count_options,
    dataset_stats,
    import_vertical_csv,
    load_dataset,
    validate_question,
)
from clio.errors import EmptyDataset, MalformedFile


def valid_record(**overrides):
    record = {
        "id": "Q100",
        "answer_type": "exactMatch",
        "prompt": "Who printed the first dated book in Europe?",
        "gold_answer": "Johann Fust / Peter Schoeffer",
        "difficulty": 2,
        "language": "English",
    }
    record.update(overrides)
    return record


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return str(path)


# --- loading -----------------------------------------------------------------

def test_load_returns_questions_and_empty_rejections(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl",
                       [valid_record(), valid_record(id="Q101")])
    dataset = load_dataset(path)
    assert len(dataset) == 2
    assert dataset.rejections == []
    assert dataset[0].id == "Q100"
    assert dataset[0].gold_alternates() == ["Johann Fust", "Peter Schoeffer"]


def test_invalid_records_are_rejected_with_field_reasons(tmp_path):
    bad = valid_record(id="Q200", answer_type="essay", difficulty=9)
    path = write_jsonl(tmp_path / "d.jsonl", [valid_record(), bad])
    dataset = load_dataset(path)
    assert len(dataset) == 1
    assert len(dataset.rejections) == 1
    rejection = dataset.rejections[0]
    assert rejection["id"] == "Q200"
    assert rejection["line"] == 2
    reasons = " | ".join(rejection["reasons"])
    assert "answer_type" in reasons and "difficulty" in reasons


def test_unparseable_lines_are_rejected_not_fatal(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text(json.dumps(valid_record()) + "\n{broken json\n[1, 2]\n",
                    encoding="utf-8")
    dataset = load_dataset(str(path))
    assert len(dataset) == 1
    assert [r["line"] for r in dataset.rejections] == [2, 3]
    assert dataset.rejections[0]["reasons"][0].startswith("json:")
    assert dataset.rejections[1]["reasons"] == ["record: not an object"]


def test_duplicate_ids_reject_the_later_record(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl",
                       [valid_record(), valid_record(prompt="other?")])
    dataset = load_dataset(path)
    assert len(dataset) == 1
    assert dataset[0].prompt.startswith("Who printed")
    assert any("duplicate" in reason
               for reason in dataset.rejections[0]["reasons"])


def test_dataset_with_no_valid_questions_raises(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [{"id": "", "prompt": ""}])
    with pytest.raises(EmptyDataset):
        load_dataset(path)
    with pytest.raises(EmptyDataset):
        load_dataset(write_jsonl(tmp_path / "blank.jsonl", []))


def test_missing_file_raises_malformed(tmp_path):
    with pytest.raises(MalformedFile):
        load_dataset(str(tmp_path / "absent.jsonl"))


def test_blank_lines_are_skipped(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text("\n" + json.dumps(valid_record()) + "\n\n",
                    encoding="utf-8")
    assert len(load_dataset(str(path))) == 1


# --- field validation ----------------------------------------------------------

def test_multiple_choice_needs_enumerable_options():
    bare = valid_record(answer_type="multipleChoice",
                        prompt="Pick the year it happened.")
    assert any("options" in reason for reason in validate_question(bare))
    good = valid_record(
        answer_type="multipleChoice",
        prompt="Pick one: (A) 1618 (B) 1648 (C) 1659")
    assert validate_question(good) == []


def test_file_questions_must_name_their_files():
    record = valid_record(data_type="file", data_files=[])
    assert any("data_files" in reason for reason in validate_question(record))
    record = valid_record(data_type="file", data_files=["assets/scan.png"])
    assert validate_question(record) == []


def test_unknown_evaluation_dimensions_are_flagged():
    record = valid_record(evaluation_dimensions=["Historical Analysis",
                                                 "Time Travel"])
    reasons = validate_question(record)
    assert any("Time Travel" in reason for reason in reasons)
    record = valid_record(
        evaluation_dimensions=list(EVALUATION_DIMENSIONS[:2]))
    assert validate_question(record) == []


def test_count_options_recognizes_label_styles():
    assert count_options("(A) one (B) two (C) three") == 3
    assert count_options("A. one\nB. two") == 2
    assert count_options("1) first 2) second 3) third 4) fourth") == 4
    assert count_options("No options here.") == 0
    # Repeated labels count once.
    assert count_options("(A) one (a) still one (B) two") == 2


def test_gold_alternates_handles_single_answers():
    question = Question(id="q", answer_type="exactMatch", prompt="p",
                        gold_answer="Basel", difficulty=1)
    assert question.gold_alternates() == ["Basel"]


def test_question_round_trips_through_to_dict():
    record = valid_record(evaluation_dimensions=["Historical Analysis"],
                          contributor={"name": "N"})
    path_free = {k: v for k, v in record.items()}
    question = Question(
        id=record["id"], answer_type=record["answer_type"],
        prompt=record["prompt"], gold_answer=record["gold_answer"],
        difficulty=record["difficulty"], language=record["language"],
        evaluation_dimensions=record["evaluation_dimensions"],
        contributor=record["contributor"])
    data = question.to_dict()
    for key, value in path_free.items():
        assert data[key] == value


# --- vertical CSV import --------------------------------------------------------

def csv_text(columns):
    """Build a vertical CSV: labels down column 0, questions across."""
    labels = ["Field", "ID", "Answer Type", "Question", "Answer",
              "Difficulty Level", "Language", "Evaluation Criteria",
              "Contributor's Name"]
    rows = [[label] for label in labels]
    rows[0] += [c.get("header", f"Question {i+1}")
                for i, c in enumerate(columns)]
    for column in columns:
        rows[1].append(column.get("id", ""))
        rows[2].append(column.get("answer_type", ""))
        rows[3].append(column.get("prompt", ""))
        rows[4].append(column.get("answer", ""))
        rows[5].append(column.get("difficulty", ""))
        rows[6].append(column.get("language", ""))
        rows[7].append(column.get("criteria", ""))
        rows[8].append(column.get("contributor", ""))
    return "\n".join(",".join(f'"{cell}"' for cell in row) for row in rows)


def test_vertical_csv_converts_one_record_per_column(tmp_path):
    path = tmp_path / "submissions.csv"
    path.write_text(csv_text([
        {"id": "V01", "answer_type": "Exact Match", "prompt": "Where?",
         "answer": "Basel", "difficulty": "Level 1", "language": "English",
         "criteria": "Historical Analysis; Source Processing",
         "contributor": "A Historian"},
        {"id": "V02", "answer_type": "Multiple Choice",
         "prompt": "Pick: (A) x (B) y", "answer": "x",
         "difficulty": "Level 3", "language": "German"},
    ]), encoding="utf-8")

    records = import_vertical_csv(str(path))

    assert len(records) == 2
    first, second = records
    assert first["id"] == "V01"
    assert first["answer_type"] == "exactMatch"
    assert first["difficulty"] == 1
    assert first["evaluation_dimensions"] == ["Historical Analysis",
                                              "Source Processing"]
    assert first["contributor"] == {"name": "A Historian"}
    assert second["answer_type"] == "multipleChoice"
    assert second["difficulty"] == 3


def test_vertical_csv_difficulty_from_header_annotation(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(csv_text([
        {"header": "Q (Level 2)", "id": "V03", "answer_type": "exact match",
         "prompt": "Who?", "answer": "Fust", "difficulty": "",
         "language": "English"}]), encoding="utf-8")
    records = import_vertical_csv(str(path))
    assert records[0]["difficulty"] == 2


def test_vertical_csv_records_flow_through_validation(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text(csv_text([
        {"id": "V04", "answer_type": "essay", "prompt": "Discuss.",
         "answer": "n/a", "difficulty": "Level 1"}]), encoding="utf-8")
    records = import_vertical_csv(str(path))
    problems = validate_question(records[0])
    assert any("answer_type" in problem for problem in problems)


def test_non_vertical_csv_is_rejected(tmp_path):
    path = tmp_path / "flat.csv"
    path.write_text("just-one-column\nvalue\n", encoding="utf-8")
    with pytest.raises(MalformedFile):
        import_vertical_csv(str(path))
    with pytest.raises(MalformedFile):
        import_vertical_csv(str(tmp_path / "absent.csv"))


# --- distribution statistics ------------------------------------------------------

def make_question(i, language="English", difficulty=1, data_type="none",
                  data_files=(), thematic=""):
    return Question(id=f"S{i:03d}", answer_type="exactMatch", prompt="p?",
                    gold_answer="a", difficulty=difficulty,
                    data_type=data_type, data_files=list(data_files),
                    language=language, thematic_category=thematic)


def test_stats_tables_cover_language_modality_difficulty():
    questions = [
        make_question(1, language="English"),
        make_question(2, language="German", difficulty=2),
        make_question(3, language="English", difficulty=3,
                      data_type="file", data_files=["assets/scan.png"]),
        make_question(4, language="", data_type="file",
                      data_files=["assets/talk.mp3"]),
    ]
    stats = dataset_stats(questions)
    assert stats["language"] == {"English": 2, "German": 1, "Unspecified": 1}
    assert stats["modality"] == {"text": 2, "image": 1, "audio": 1}
    assert stats["difficulty"] == {"Level 1": 2, "Level 2": 1, "Level 3": 1}


def test_stats_period_table_keeps_the_partition():
    questions = [
        make_question(1, thematic="16th century printing"),
        make_question(2, thematic="Medieval manuscripts"),
        make_question(3, thematic="Economic history"),
    ]
    stats = dataset_stats(questions)
    assert stats["period"]["16th century"] == 1
    assert stats["period"]["medieval"] == 1
    assert stats["period"]["unspecified"] == 1
    assert sum(stats["period"].values()) == len(questions)


def test_stats_of_empty_dataset_raise():
    with pytest.raises(EmptyDataset):
        dataset_stats([])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(
    st.sampled_from(["English", "German", "Chinese", ""]),
    st.sampled_from([1, 2, 3]),
    st.sampled_from(["none", "image", "audio", "video", "doc"]),
), min_size=1, max_size=25))
def test_every_stats_table_partitions_the_dataset(rows):
    EXT = {"image": "x.png", "audio": "x.mp3", "video": "x.mp4",
           "doc": "x.pdf"}
    questions = []
    for i, (language, difficulty, kind) in enumerate(rows):
        files = [EXT[kind]] if kind != "none" else []
        questions.append(make_question(
            i, language=language, difficulty=difficulty,
            data_type="file" if files else "none", data_files=files))
    stats = dataset_stats(questions)
    for table in ("language", "modality", "difficulty"):
        assert sum(stats[table].values()) == len(questions), table


def test_stats_shape_on_a_larger_mixed_corpus():
    # A corpus shaped like a real benchmark: English-heavy with a long
    # multilingual tail; counts must reproduce exactly.
    spec = [("English", 228), ("Chinese", 41), ("German", 32),
            ("French", 26), ("Japanese", 19), ("Latin", 15),
            ("Russian", 12), ("Italian", 11), ("Spanish", 9),
            ("Dutch", 8), ("Greek", 7), ("Arabic", 6)]
    questions = []
    index = 0
    for language, count in spec:
        for _ in range(count):
            questions.append(make_question(index, language=language,
                                           difficulty=(index % 3) + 1))
            index += 1
    stats = dataset_stats(questions)
    assert stats["language"]["English"] == 228
    assert stats["language"]["Chinese"] == 41
    assert stats["language"]["Spanish"] == 9
    assert sum(stats["language"].values()) == sum(c for _, c in spec)
    # most_common ordering puts the dominant language first.
    assert next(iter(stats["language"])) == "English"
