"""Append-only attempt ledger backing resume and scoring.

One JSON object per line in results.jsonl. Appends go through a single
O_APPEND write so concurrent workers never interleave partial lines;
rewrites (--force) go through a temp file and rename.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Optional

from clio.bench.scoring import AttemptRecord

RESULTS_NAME = "results.jsonl"


class ResultStore:
    def __init__(self, directory: str):
        self.directory = directory
        self.path = os.path.join(directory, RESULTS_NAME)

    def exists(self) -> bool:
        return os.path.exists(self.path)

    def append(self, record: AttemptRecord):
        os.makedirs(self.directory, exist_ok=True)
        line = json.dumps(record.to_dict(), ensure_ascii=False,
                          sort_keys=True) + "\n"
        fd = os.open(self.path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)
        try:
            os.write(fd, line.encode("utf-8"))
        finally:
            os.close(fd)

    def load(self) -> list[AttemptRecord]:
        """All well-formed attempt lines, in file order.

        A torn final line from an interrupted run is skipped, not fatal;
        the rerun simply redoes that attempt.
        """
        if not self.exists():
            return []
        records = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(AttemptRecord.from_dict(json.loads(line)))
                except (ValueError, KeyError, TypeError):
                    continue
        return records

    def index(self) -> dict[tuple[str, int], AttemptRecord]:
        """(question_id, attempt_index) -> latest record for that slot."""
        table: dict[tuple[str, int], AttemptRecord] = {}
        for record in self.load():
            table[(record.question_id, record.attempt_index)] = record
        return table

    def completed_attempts(self, question_id: str) -> set[int]:
        return {attempt for (qid, attempt) in self.index() if qid == question_id}

    def clear_question(self, question_id: str):
        """Drop every attempt for one question (the --force path)."""
        if not self.exists():
            return
        kept = [record for record in self.load()
                if record.question_id != question_id]
        self._rewrite(kept)

    def _rewrite(self, records: Iterable[AttemptRecord]):
        os.makedirs(self.directory, exist_ok=True)
        tmp = self.path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record.to_dict(), ensure_ascii=False,
                                    sort_keys=True) + "\n")
        os.replace(tmp, self.path)
