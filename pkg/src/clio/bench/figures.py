"""Figure and table rendering for scores and dataset statistics.

Every figure written as a PNG gets a CSV twin with the same stem, so the
numbers behind each chart stay machine-readable.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _write_csv(path: str, header: list[str], rows: list[list]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def render_stats_outputs(tables: dict[str, dict], out_dir: str) -> list[str]:
    """One bar chart + CSV per distribution table; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for dimension, counts in tables.items():
        csv_path = os.path.join(out_dir, f"stats_{dimension}.csv")
        _write_csv(csv_path, [dimension, "count"],
                   [[value, count] for value, count in counts.items()])
        written.append(csv_path)

        figure, axis = plt.subplots(figsize=(8, max(2.5, 0.4 * len(counts))))
        labels = list(counts.keys())
        values = [counts[label] for label in labels]
        positions = range(len(labels))
        axis.barh(positions, values, color="#4878a8")
        axis.set_yticks(positions)
        axis.set_yticklabels(labels)
        axis.invert_yaxis()
        axis.set_xlabel("questions")
        axis.set_title(f"Distribution by {dimension}")
        for position, value in zip(positions, values):
            axis.text(value, position, f" {value}", va="center")
        figure.tight_layout()
        png_path = os.path.join(out_dir, f"stats_{dimension}.png")
        figure.savefig(png_path, dpi=120)
        plt.close(figure)
        written.append(png_path)
    return written


def render_score_outputs(report, out_dir: str) -> list[str]:
    """Accuracy bar chart + CSV for a ScoreReport; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    rows = []
    for level, accuracy in sorted(report.per_level.items()):
        correct, total = report.counts[level]
        rows.append([f"Level {level}", correct, total,
                     f"{accuracy * 100:.2f}"])
    total_correct = sum(correct for correct, _ in report.counts.values())
    total_questions = sum(total for _, total in report.counts.values())
    rows.append(["Overall", total_correct, total_questions,
                 f"{report.overall * 100:.2f}"])
    csv_path = os.path.join(out_dir, f"scores_pass_at_{report.k}.csv")
    _write_csv(csv_path, ["level", "correct", "total", "accuracy_percent"],
               rows)
    written.append(csv_path)

    figure, axis = plt.subplots(figsize=(6, 4))
    labels = [row[0] for row in rows]
    values = [float(row[3]) for row in rows]
    colors = ["#4878a8"] * (len(rows) - 1) + ["#a85448"]
    axis.bar(labels, values, color=colors)
    axis.set_ylabel("accuracy (%)")
    axis.set_ylim(0, 100)
    axis.set_title(f"pass@{report.k} accuracy")
    for index, value in enumerate(values):
        axis.text(index, value, f"{value:.2f}", ha="center", va="bottom")
    figure.tight_layout()
    png_path = os.path.join(out_dir, f"scores_pass_at_{report.k}.png")
    figure.savefig(png_path, dpi=120)
    plt.close(figure)
    written.append(png_path)
    return written
