"""Command line interface: run sessions, run the benchmark, score, stats.

Exit codes: 0 success (run-question: answered), 1 failed, 2 budget
exhausted, 3 partial failure (benchmark: some attempts errored), 64
usage or configuration error.

Credentials are read from the environment only (LLM_API_KEY,
JUDGE_API_KEY, SEARCH_API_KEY, PUBLISHER_API_KEY, OCR_API_KEY,
IMAGE_HOST_KEY, ASR_API_KEY); there are no flags for them and their
values never reach logs or artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed

from clio.agents import build_registry
from clio.backends import (
    Backends,
    LiveFetchBackend,
    LiveImageHostBackend,
    LiveManuscriptOcrBackend,
    LiveModelBackend,
    LivePublisherBackend,
    LiveSearchBackend,
    ScriptedModelBackend,
    offline_backends,
)
from clio.bench.dataset import dataset_stats, load_dataset
from clio.bench.figures import render_score_outputs, render_stats_outputs
from clio.bench.judge import NONE_MARKER, JudgeVerdict, judge_question
from clio.bench.scoring import AttemptRecord, compute_pass_at_k
from clio.config import (
    MODE_REPLAY,
    CliConfig,
    CredentialScrubFilter,
    load_config,
)
from clio.errors import AgentUnavailable, BackendError, ClioError, ConfigError
from clio.orchestrator import (
    STATUS_ANSWERED,
    STATUS_BUDGET_EXHAUSTED,
    STATUS_FAILED,
    SessionConfig,
    run_session,
)
from clio.store import ResultStore
from clio.tools.replay import (
    Cassette,
    ReplayArchiveBackend,
    ReplayBookIndexBackend,
    ReplayFetchBackend,
    ReplayModelBackend,
    ReplayPublisherBackend,
    ReplayReverseImageBackend,
    ReplayScholarBackend,
    ReplaySearchBackend,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BUDGET_EXHAUSTED = 2
EXIT_PARTIAL_FAILURE = 3
EXIT_USAGE = 64

log = logging.getLogger("clio.cli")


# --- backend assembly ------------------------------------------------------

def _replay_replies_path(fixture_dir: str, kind: str, question_id: str,
                         attempt_index: int, suffix: str) -> str:
    """Per-attempt reply file if present, else the per-question one."""
    per_attempt = os.path.join(
        fixture_dir, kind, f"{question_id}.a{attempt_index}{suffix}")
    if os.path.exists(per_attempt):
        return per_attempt
    return os.path.join(fixture_dir, kind, f"{question_id}{suffix}")


def build_replay_backends(config: CliConfig, question_id: str,
                          attempt_index: int) -> Backends:
    """Scripted planner plus cassette-backed transports; zero network."""
    fixture = config.fixture_dir
    cassette = Cassette(os.path.join(fixture, "cassettes"))
    planner_path = _replay_replies_path(fixture, "planner", question_id,
                                        attempt_index, ".json")
    if os.path.exists(planner_path):
        model = ReplayModelBackend(planner_path)
    else:
        model = ScriptedModelBackend([])
    return offline_backends(
        model=model,
        search=ReplaySearchBackend(cassette),
        fetch=ReplayFetchBackend(cassette),
        archive=ReplayArchiveBackend(cassette),
        scholar=ReplayScholarBackend(cassette),
        book_index=ReplayBookIndexBackend(cassette),
        publisher=ReplayPublisherBackend(cassette),
        image_match=ReplayReverseImageBackend(cassette),
    )


def build_replay_judge(config: CliConfig, question_id: str,
                       attempt_index: int):
    path = _replay_replies_path(config.fixture_dir, "judge", question_id,
                                attempt_index, ".txt")
    if not os.path.exists(path):
        return ScriptedModelBackend([])
    with open(path, "r", encoding="utf-8") as fh:
        return ScriptedModelBackend([fh.read()], repeat_last=True)


def build_live_backends(config: CliConfig) -> Backends:
    """Live transports where credentials exist; inert seams elsewhere."""

    def _maybe(ctor):
        try:
            return ctor()
        except AgentUnavailable:
            return None

    base = Backends(
        model=LiveModelBackend(config.model),
        fetch=LiveFetchBackend(),
        search=_maybe(LiveSearchBackend),
        publisher=_maybe(LivePublisherBackend),
        ocr_western=_maybe(LiveManuscriptOcrBackend),
        image_host=_maybe(LiveImageHostBackend),
    )
    return base


def build_judge_backend(config: CliConfig, question_id: str,
                        attempt_index: int):
    if config.mode == MODE_REPLAY:
        return build_replay_judge(config, question_id, attempt_index)
    return LiveModelBackend(config.judge_model, key_env="JUDGE_API_KEY")


def _backends_for(config: CliConfig, question_id: str,
                  attempt_index: int) -> Backends:
    if config.mode == MODE_REPLAY:
        return build_replay_backends(config, question_id, attempt_index)
    return build_live_backends(config)


def _session_config(config: CliConfig, attempt_index: int) -> SessionConfig:
    return SessionConfig(
        max_steps=config.max_steps,
        replan_interval=config.replan_interval,
        model_backend="model",
        per_tool_call_budget=config.per_tool_call_budget,
        random_seed=config.random_seed + attempt_index - 1,
        output_dir=config.output_dir,
    )


# --- commands --------------------------------------------------------------

def _load_questions(config: CliConfig):
    if not config.dataset:
        raise ConfigError("a dataset path is required", key="dataset")
    dataset = load_dataset(config.dataset)
    for rejection in dataset.rejections:
        log.warning("rejected dataset line %s (%s): %s",
                    rejection.get("line"), rejection.get("id"),
                    "; ".join(rejection.get("reasons", [])))
    return dataset


def _find_question(dataset, question_id: str):
    for question in dataset:
        if question.id == question_id:
            return question
    return None


def cmd_run_question(config: CliConfig) -> int:
    if not config.question_id:
        raise ConfigError("run-question requires --question-id",
                          key="question_id")
    dataset = _load_questions(config)
    question = _find_question(dataset, config.question_id)
    if question is None:
        raise ConfigError(
            f"question id {config.question_id!r} is not in the dataset",
            key="question_id")

    session_dir = os.path.join(config.output_dir, question.id)
    report_path = os.path.join(session_dir, "report.md")
    if os.path.exists(report_path) and not config.force:
        print(f"{question.id}: already completed ({report_path}); "
              "use --force to rerun")
        return EXIT_OK

    backends = _backends_for(config, question.id, 1)
    registry = build_registry({})
    result = run_session(question, _session_config(config, 1), registry,
                         backends, attempt_index=1, session_dir=session_dir)
    print(f"{question.id}: {result.status}")
    if result.final_answer:
        print(f"answer: {result.final_answer}")
    print(f"trace: {os.path.join(session_dir, 'trace.jsonl')}")
    print(f"report: {report_path}")
    if result.status == STATUS_ANSWERED:
        return EXIT_OK
    if result.status == STATUS_BUDGET_EXHAUSTED:
        return EXIT_BUDGET_EXHAUSTED
    return EXIT_FAILED


def _run_attempt(question, attempt_index: int, config: CliConfig):
    backends = _backends_for(config, question.id, attempt_index)
    session_dir = os.path.join(config.output_dir, question.id,
                               f"attempt_{attempt_index}")
    result = run_session(question, _session_config(config, attempt_index),
                         build_registry({}), backends,
                         attempt_index=attempt_index, session_dir=session_dir)
    if config.timeout is not None and result.wall_time > config.timeout:
        result.status = STATUS_FAILED
        result.final_answer = ""
    if result.final_answer:
        judge_backend = build_judge_backend(config, question.id, attempt_index)
        verdict = judge_question(question, result.final_answer, judge_backend)
    else:
        verdict = JudgeVerdict(
            extracted_final_answer=NONE_MARKER,
            reasoning=f"session ended with status {result.status} "
                      "and produced no answer",
            correct="no",
            confidence=100,
        )
    record = AttemptRecord(
        question_id=question.id,
        attempt_index=attempt_index,
        response_text=result.final_answer,
        verdict=verdict,
        run_result_ref=os.path.relpath(session_dir, config.output_dir),
    )
    return record, result.status


def cmd_run_benchmark(config: CliConfig) -> int:
    dataset = _load_questions(config)
    store = ResultStore(config.output_dir)
    if config.force:
        for question in dataset:
            store.clear_question(question.id)
    done = set(store.index())
    jobs = [(question, attempt)
            for question in dataset
            for attempt in range(1, config.pass_k + 1)
            if (question.id, attempt) not in done]
    if not jobs:
        print("all attempts already recorded; use --force to rerun")
    append_lock = threading.Lock()
    ran = 0
    errors = 0
    statuses: list[str] = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = {
            pool.submit(_run_attempt, question, attempt, config):
                (question.id, attempt)
            for question, attempt in jobs
        }
        for future in as_completed(futures):
            question_id, attempt = futures[future]
            try:
                record, status = future.result()
            except (ClioError, OSError, ValueError) as exc:
                errors += 1
                log.error("attempt %s/%d errored: %s", question_id, attempt,
                          exc)
                continue
            with append_lock:
                store.append(record)
            ran += 1
            statuses.append(status)
            print(f"{question_id} attempt {attempt}: {status}; judged "
                  f"{record.verdict.correct}")

    attempts = store.load()
    exit_code = EXIT_OK
    if errors and ran:
        exit_code = EXIT_PARTIAL_FAILURE
    elif errors:
        exit_code = EXIT_FAILED
    try:
        report = compute_pass_at_k(attempts, dataset, config.pass_k)
    except ClioError as exc:
        log.error("scoring skipped: %s", exc)
        return exit_code if exit_code != EXIT_OK else EXIT_PARTIAL_FAILURE
    scores_path = os.path.join(config.output_dir, "scores.json")
    with open(scores_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths = render_score_outputs(report, config.output_dir)
    print(f"pass@{config.pass_k} overall: {report.overall * 100:.3f}%")
    for level in sorted(report.per_level):
        correct, total = report.counts[level]
        print(f"  level {level}: {report.per_level[level] * 100:.3f}% "
              f"({correct}/{total})")
    print(f"scores: {scores_path}")
    for path in paths:
        print(f"wrote: {path}")
    return exit_code


def cmd_score(config: CliConfig) -> int:
    dataset = _load_questions(config)
    store = ResultStore(config.output_dir)
    attempts = store.load()
    if not attempts:
        raise ClioError(
            f"no attempts recorded under {store.path}; run the benchmark first")
    report = compute_pass_at_k(attempts, dataset, config.pass_k)
    scores_path = os.path.join(config.output_dir, "scores.json")
    with open(scores_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths = render_score_outputs(report, config.output_dir)
    print(f"pass@{config.pass_k} overall: {report.overall * 100:.3f}%")
    for level in sorted(report.per_level):
        correct, total = report.counts[level]
        print(f"  level {level}: {report.per_level[level] * 100:.3f}% "
              f"({correct}/{total})")
    print(f"scores: {scores_path}")
    for path in paths:
        print(f"wrote: {path}")
    return EXIT_OK


def cmd_stats(config: CliConfig) -> int:
    dataset = _load_questions(config)
    tables = dataset_stats(dataset)
    for dimension, counts in tables.items():
        print(f"{dimension}:")
        for key, count in sorted(counts.items(),
                                 key=lambda item: (-item[1], item[0])):
            print(f"  {key}: {count}")
    os.makedirs(config.output_dir, exist_ok=True)
    paths = render_stats_outputs(tables, config.output_dir)
    for path in paths:
        print(f"wrote: {path}")
    return EXIT_OK


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit 64)."""

    def error(self, message):
        raise ConfigError(message)


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", default=None,
                        help="JSON config file (lowest-precedence layer "
                             "above defaults)")
    parser.add_argument("--dataset", default=None,
                        help="path to the question dataset (JSONL)")
    parser.add_argument("--output-dir", default=None, dest="output_dir")
    parser.add_argument("--model", default=None,
                        help="planner model name (live mode)")
    parser.add_argument("--judge-model", default=None, dest="judge_model")
    parser.add_argument("--mode", default=None, choices=["live", "replay"])
    parser.add_argument("--fixture-dir", default=None, dest="fixture_dir",
                        help="replay fixture bundle (required in replay mode)")
    parser.add_argument("--max-steps", default=None, dest="max_steps")
    parser.add_argument("--pass-k", default=None, dest="pass_k")
    parser.add_argument("--seed", default=None, dest="random_seed")
    parser.add_argument("--workers", default=None)
    parser.add_argument("--timeout", default=None,
                        help="per-attempt wall-clock limit in seconds "
                             "(no default)")
    parser.add_argument("--force", action="store_const", const=True,
                        default=None,
                        help="rerun work that already has recorded results")
    parser.add_argument("--question-id", default=None, dest="question_id")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clio",
                     description="Research agent sessions and benchmark "
                                 "evaluation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("run-question", "run one research session"),
            ("run-benchmark", "run every question for k attempts and score"),
            ("score", "recompute pass@k from recorded attempts"),
            ("stats", "dataset composition tables, CSV and charts")):
        command = sub.add_parser(name, help=help_text)
        _add_common_flags(command)
    return parser


_CONFIG_FLAG_KEYS = ("dataset", "question_id", "model", "judge_model",
                     "pass_k", "max_steps", "random_seed", "output_dir",
                     "mode", "fixture_dir", "force", "workers", "timeout")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    for handler in logging.getLogger().handlers:
        handler.addFilter(CredentialScrubFilter())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        flag_values = {key: getattr(args, key, None)
                       for key in _CONFIG_FLAG_KEYS}
        config = load_config(flag_values, config_path=args.config or "")
        handler = {
            "run-question": cmd_run_question,
            "run-benchmark": cmd_run_benchmark,
            "score": cmd_score,
            "stats": cmd_stats,
        }[args.command]
        return handler(config)
    except ConfigError as exc:
        key = f" [{exc.key}]" if getattr(exc, "key", None) else ""
        print(f"clio: config error{key}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AgentUnavailable, BackendError) as exc:
        print(f"clio: backend unavailable: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClioError as exc:
        print(f"clio: error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
