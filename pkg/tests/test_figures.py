"""Chart rendering: every PNG gets a CSV twin with the same numbers."""

import csv
import os

from clio.bench.figures import render_score_outputs, render_stats_outputs
from clio.bench.scoring import ScoreReport


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_stats_outputs_one_csv_and_png_per_table(tmp_path):
    tables = {
        "language": {"English": 3, "Latin": 1},
        "difficulty": {"Level 1": 2, "Level 2": 2},
    }
    written = render_stats_outputs(tables, str(tmp_path))
    names = sorted(os.path.basename(p) for p in written)
    assert names == ["stats_difficulty.csv", "stats_difficulty.png",
                     "stats_language.csv", "stats_language.png"]
    for path in written:
        assert os.path.getsize(path) > 0
    rows = read_csv(tmp_path / "stats_language.csv")
    assert rows == [["language", "count"], ["English", "3"], ["Latin", "1"]]


def test_stats_pngs_are_valid_png_files(tmp_path):
    written = render_stats_outputs({"modality": {"text": 5}}, str(tmp_path))
    png = [p for p in written if p.endswith(".png")][0]
    with open(png, "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_score_csv_holds_per_level_and_overall_percentages(tmp_path):
    report = ScoreReport(k=2, per_level={1: 0.5, 2: 1.0, 3: 0.0},
                         overall=0.4,
                         counts={1: (1, 2), 2: (1, 1), 3: (0, 2)})
    written = render_score_outputs(report, str(tmp_path))
    assert sorted(os.path.basename(p) for p in written) == [
        "scores_pass_at_2.csv", "scores_pass_at_2.png"]
    rows = read_csv(tmp_path / "scores_pass_at_2.csv")
    assert rows[0] == ["level", "correct", "total", "accuracy_percent"]
    assert rows[1] == ["Level 1", "1", "2", "50.00"]
    assert rows[2] == ["Level 2", "1", "1", "100.00"]
    assert rows[3] == ["Level 3", "0", "2", "0.00"]
    assert rows[4] == ["Overall", "2", "5", "40.00"]


def test_score_png_written_alongside_csv(tmp_path):
    report = ScoreReport(k=1, per_level={1: 1.0}, overall=1.0,
                         counts={1: (1, 1)})
    written = render_score_outputs(report, str(tmp_path))
    png = [p for p in written if p.endswith(".png")][0]
    assert os.path.basename(png) == "scores_pass_at_1.png"
    with open(png, "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


def test_output_directory_is_created_on_demand(tmp_path):
    nested = tmp_path / "a" / "b"
    written = render_stats_outputs({"language": {"English": 1}}, str(nested))
    assert all(os.path.exists(p) for p in written)
