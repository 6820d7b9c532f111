"""Benchmark harness: dataset loading, judging, scoring, screening,
report rendering, and dataset statistics."""
