"""Manager loop: plan, act, validate, synthesize, within step budgets.

The planner model replies with one structured call per step, a JSON
object {"action", "arguments", "rationale"}. Actions name a specialist
agent, a raw tool (permitted and logged as its own path), an optional
sandboxed arithmetic expression, or the reserved final_answer sentinel
whose arguments carry the answer verbatim. Every step appends one entry
to the trace; the trace and the four-section report are the artifacts
of record for a session.
"""

from __future__ import annotations

import ast
import json
import os
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from clio.agents import AgentRegistry, SubtaskRequest, invoke_agent, route
from clio.backends import Backends, with_retries
from clio.bench.reporting import render_summary_report
from clio.errors import BackendError, PlanParseError, ToolError
from clio.evidence import EvidenceRecord, quote_present
from clio.tools import TOOL_REGISTRY, Toolbox
from clio.tools.web import PageContent, extract_text

FINAL_ANSWER_ACTION = "final_answer"
EXPRESSION_ACTION = "evaluate"

STATUS_ANSWERED = "answered"
STATUS_BUDGET_EXHAUSTED = "budget_exhausted"
STATUS_FAILED = "failed"


@dataclass
class SessionConfig:
    max_steps: int = 20
    replan_interval: int = 5
    model_backend: str = "model"
    per_tool_call_budget: int = 3
    random_seed: int = 0
    output_dir: str = ""
    # Repair retries for malformed planner replies before giving up.
    plan_repair_retries: int = 1
    # Sandboxed arithmetic expressions are off unless explicitly enabled.
    allow_expressions: bool = False

    def validate(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not 1 <= self.replan_interval <= self.max_steps:
            raise ValueError("replan_interval must be in [1, max_steps]")
        if self.per_tool_call_budget < 1:
            raise ValueError("per_tool_call_budget must be at least 1")
        if self.plan_repair_retries < 0:
            raise ValueError("plan_repair_retries must be >= 0")


@dataclass
class ActionStep:
    step_index: int
    target: str
    arguments: dict = field(default_factory=dict)
    rationale: str = ""

    def is_final(self) -> bool:
        return self.target == FINAL_ANSWER_ACTION

    def to_dict(self) -> dict:
        return {"step_index": self.step_index, "target": self.target,
                "arguments": self.arguments, "rationale": self.rationale}


@dataclass
class Observation:
    step_ref: int
    payload: object = None
    evidence_refs: list[str] = field(default_factory=list)
    status: str = "ok"

    def to_dict(self) -> dict:
        return {"step_ref": self.step_ref, "payload": self.payload,
                "evidence_refs": self.evidence_refs, "status": self.status}


@dataclass
class ValidationReport:
    quote_exactness: dict[str, bool] = field(default_factory=dict)
    bib_completeness: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def record_passes(self, record: EvidenceRecord) -> bool:
        """A record stands when its quote verifies, or, quote-less, when
        its citation is complete."""
        if record.quote:
            return self.quote_exactness.get(record.record_id, False)
        return self.bib_completeness.get(record.record_id, False)

    def all_pass(self, records: list[EvidenceRecord]) -> bool:
        return all(self.record_passes(record) for record in records)

    def to_dict(self) -> dict:
        return {"quote_exactness": dict(sorted(self.quote_exactness.items())),
                "bib_completeness": dict(sorted(self.bib_completeness.items())),
                "notes": list(self.notes)}


@dataclass
class TraceEntry:
    step: ActionStep
    observation: Observation
    evidence: list[EvidenceRecord] = field(default_factory=list)
    path: str = "tool"
    validation: Optional[ValidationReport] = None

    def to_dict(self) -> dict:
        entry = {
            "step": self.step.to_dict(),
            "observation": self.observation.to_dict(),
            "evidence": [record.to_dict() for record in self.evidence],
            "path": self.path,
        }
        if self.validation is not None:
            entry["validation"] = self.validation.to_dict()
        return entry


class SharedMemory:
    """Append-only session memory: trace entries, evidence, warnings."""

    def __init__(self):
        self.entries: list[TraceEntry] = []
        self.evidence: dict[str, EvidenceRecord] = {}
        self.validated_ids: set[str] = set()
        self.planner_answer: str = ""
        self.planner_justification: str = ""
        self.warnings: list[str] = []

    def append(self, entry: TraceEntry):
        self.entries.append(entry)
        for record in entry.evidence:
            self.evidence.setdefault(record.record_id, record)

    def mark_validated(self, record_ids):
        self.validated_ids.update(record_ids)

    def validated_records(self) -> list[EvidenceRecord]:
        return [self.evidence[record_id] for record_id in self.evidence
                if record_id in self.validated_ids]


@dataclass
class RunResult:
    question_id: str
    final_answer: str
    trace: list[TraceEntry]
    summary_report: str
    status: str
    wall_time: float = 0.0
    session_id: str = ""


# --- planning ------------------------------------------------------------

_JSON_OBJECT_RE = re.compile(r"\{.*\}", re.DOTALL)


def _extract_json_object(reply: str) -> dict:
    match = _JSON_OBJECT_RE.search(reply or "")
    if not match:
        raise ValueError("no JSON object in reply")
    data = json.loads(match.group(0))
    if not isinstance(data, dict):
        raise ValueError("reply JSON is not an object")
    return data


def _known_targets(registry: Optional[AgentRegistry]) -> set[str]:
    targets = set(TOOL_REGISTRY)
    targets.add(FINAL_ANSWER_ACTION)
    targets.add(EXPRESSION_ACTION)
    if registry is not None:
        targets.update(spec.agent_id for spec in registry.specs())
    return targets


def _planner_prompt(question, trace_so_far: list[TraceEntry],
                    config: SessionConfig,
                    registry: Optional[AgentRegistry]) -> str:
    lines = [
        "You are the manager of a research agent team. Decide the single "
        "next action.",
        "",
        f"Question ({question.id}): {question.prompt}",
    ]
    if question.data_files:
        lines.append("Attached files: " + ", ".join(question.data_files))
    if registry is not None:
        lines.append("")
        lines.append("Specialist agents:")
        for spec in registry.specs():
            lines.append(f"- {spec.agent_id} ({spec.modality}): tools "
                         + ", ".join(spec.tool_ids))
    lines.append("")
    lines.append("You may also call a tool directly by its tool id.")
    steps_left = config.max_steps - len(trace_so_far)
    lines.append(f"Steps remaining: {steps_left}.")
    if trace_so_far:
        lines.append("")
        lines.append("Steps so far:")
        for entry in trace_so_far:
            payload = json.dumps(entry.observation.payload, ensure_ascii=False,
                                 sort_keys=True, default=str)
            if len(payload) > 400:
                payload = payload[:397] + "..."
            lines.append(f"- step {entry.step.step_index}: "
                         f"{entry.step.target} -> {entry.observation.status}: "
                         f"{payload}")
    if trace_so_far and len(trace_so_far) % config.replan_interval == 0:
        lines.append("")
        lines.append("Budget checkpoint: revise your plan before acting; "
                     "drop lines of inquiry that are not converging.")
    lines.append("")
    lines.append(
        'Reply with exactly one JSON object: {"action": "<agent, tool, or '
        'final_answer>", "arguments": {...}, "rationale": "<why>"}. '
        'To finish, use action "final_answer" with arguments '
        '{"answer": "<your answer verbatim>"}.')
    return "\n".join(lines)


def plan_next_action(trace_so_far: list[TraceEntry], shared_memory: SharedMemory,
                     config: SessionConfig, backends: Backends,
                     question, registry: Optional[AgentRegistry] = None) -> ActionStep:
    """Ask the planner model for the next step and parse its reply.

    Malformed replies (no JSON object, unknown action) get
    plan_repair_retries re-prompts carrying the parse error back to the
    model; persistent failure raises PlanParseError with the raw reply.
    """
    if len(trace_so_far) >= config.max_steps:
        raise ValueError("trace already at max_steps")
    model = backends.require(config.model_backend)
    prompt = _planner_prompt(question, trace_so_far, config, registry)
    known = _known_targets(registry)
    attempts = config.plan_repair_retries + 1
    last_error = ""
    reply = ""
    for attempt in range(attempts):
        ask = prompt
        if attempt:
            ask = (prompt + "\n\nYour previous reply could not be used ("
                   + last_error + "). Reply with exactly one valid JSON "
                   "object as instructed.")
        reply = with_retries(lambda p=ask: model.complete(p),
                             sleep=backends.sleep)
        try:
            data = _extract_json_object(reply)
            target = data.get("action")
            if not isinstance(target, str) or not target:
                raise ValueError("missing action name")
            if target not in known:
                raise ValueError(f"unknown action {target!r}")
            arguments = data.get("arguments", {})
            if not isinstance(arguments, dict):
                raise ValueError("arguments must be an object")
            if target == FINAL_ANSWER_ACTION and "answer" not in arguments:
                raise ValueError("final_answer needs an answer argument")
            return ActionStep(step_index=len(trace_so_far), target=target,
                              arguments=arguments,
                              rationale=str(data.get("rationale", "")))
        except (ValueError, json.JSONDecodeError) as exc:
            last_error = str(exc)
    raise PlanParseError(
        f"planner reply unusable after {attempts} attempts: {last_error}",
        raw_reply=reply)


# --- validation ----------------------------------------------------------

def validate_evidence(observation: Observation, source_fetcher: Callable[[str], str],
                      records: Optional[list[EvidenceRecord]] = None) -> ValidationReport:
    """Check quotes against their claimed sources and citations for
    completeness.

    Quotes verify by exact substring presence after whitespace collapsing
    (case stays significant). An unreachable source fails that quote with
    a note; it never raises. Citation completeness requires a title plus
    one locator (URL, or venue and year).
    """
    if observation.status != "ok":
        raise ValueError("validate_evidence expects an ok observation")
    report = ValidationReport()
    for record in records or []:
        bib = record.bib
        report.bib_completeness[record.record_id] = bool(
            bib.title and (record.url or (bib.venue and bib.year is not None)))
        if not record.quote:
            continue
        if not record.url:
            report.quote_exactness[record.record_id] = False
            report.notes.append(
                f"{record.record_id}: quote has no source URL to verify against")
            continue
        try:
            source_text = source_fetcher(record.url)
        except Exception as exc:
            report.quote_exactness[record.record_id] = False
            report.notes.append(
                f"{record.record_id}: source unreachable ({exc})")
            continue
        ok = quote_present(record.quote, source_text or "")
        report.quote_exactness[record.record_id] = ok
        if not ok:
            report.notes.append(
                f"{record.record_id}: quote not found in {record.url}")
    return report


# --- synthesis -----------------------------------------------------------

def synthesize_answer(shared_memory: SharedMemory, question,
                      model=None) -> tuple[str, str]:
    """Merge validated findings into the final answer and render the
    four-section report.

    The planner's verbatim final_answer wins when present; otherwise a
    model pass over the validated evidence produces the answer. With
    neither, the answer is empty and the report says so.
    """
    final_answer = shared_memory.planner_answer
    validated = shared_memory.validated_records()
    if not final_answer and model is not None and validated:
        lines = ["Based only on the evidence below, state the final answer "
                 f"to the question, as briefly as possible.",
                 "", f"Question: {question.prompt}", "", "Evidence:"]
        for record in validated:
            title = record.bib.title or record.url
            lines.append(f"- [{record.record_id}] {title}: {record.quote}")
        try:
            final_answer = model.complete("\n".join(lines)).strip()
        except BackendError:
            final_answer = ""

    status = STATUS_ANSWERED if final_answer else STATUS_FAILED
    view = RunResult(question_id=question.id, final_answer=final_answer,
                     trace=shared_memory.entries, summary_report="",
                     status=status)
    report = render_summary_report(view, warnings=shared_memory.warnings,
                                   validated_ids=shared_memory.validated_ids)
    return final_answer, report


# --- expression sandbox ---------------------------------------------------

_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant,
                  ast.Add, ast.Sub, ast.Mult, ast.Div, ast.FloorDiv, ast.Mod,
                  ast.Pow, ast.USub, ast.UAdd, ast.Compare, ast.Eq, ast.NotEq,
                  ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Tuple, ast.List,
                  ast.Load)


def evaluate_expression(expression: str):
    """Evaluate a pure arithmetic/comparison expression; nothing else."""
    tree = ast.parse(expression, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ToolError(
                f"expression node {type(node).__name__} is not allowed")
        if isinstance(node, ast.Constant) and not isinstance(
                node.value, (int, float, bool)):
            raise ToolError("only numeric constants are allowed")
    return eval(compile(tree, "<expression>", "eval"), {"__builtins__": {}}, {})


# --- the session loop ------------------------------------------------------

def _check_attachments(question, shared_memory: SharedMemory):
    readable = []
    for path in question.data_files:
        if os.path.exists(path) and os.access(path, os.R_OK):
            readable.append(path)
        else:
            shared_memory.warnings.append(
                f"attached file unreadable, proceeding without it: {path}")
    return readable


def _dispatch(step: ActionStep, question, registry: AgentRegistry,
              backends: Backends, toolbox: Toolbox, config: SessionConfig,
              attachments: list[str]) -> tuple[Observation, list[EvidenceRecord], str]:
    arguments = dict(step.arguments)
    if registry is not None and step.target in registry:
        path = "agent"
        request = SubtaskRequest(
            agent_id=step.target,
            instruction=str(arguments.pop("instruction", question.prompt)),
            attachments=list(arguments.pop("attachments", attachments)),
            arguments=arguments,
        )
        try:
            result = invoke_agent(request, registry, backends,
                                  toolbox=toolbox,
                                  workspace_dir=toolbox.workspace_dir)
            observation = Observation(
                step_ref=step.step_index, payload=result.payload,
                evidence_refs=[r.record_id for r in result.evidence],
                status="ok")
            return observation, result.evidence, path
        except (ToolError, BackendError) as exc:
            observation = Observation(step_ref=step.step_index,
                                      payload=str(exc), status="tool_error")
            return observation, [], path
    if step.target == EXPRESSION_ACTION:
        path = "expression"
        if not config.allow_expressions:
            observation = Observation(
                step_ref=step.step_index,
                payload="expression evaluation is disabled by config",
                status="tool_error")
            return observation, [], path
        try:
            value = evaluate_expression(str(arguments.get("expression", "")))
            observation = Observation(step_ref=step.step_index,
                                      payload=value, status="ok")
        except (ToolError, SyntaxError) as exc:
            observation = Observation(step_ref=step.step_index,
                                      payload=str(exc), status="tool_error")
        return observation, [], path
    # Raw tool access from the manager: permitted, logged as its own path.
    path = "tool"
    result = toolbox.call(step.target, **arguments)
    observation = Observation(
        step_ref=step.step_index, payload=result.payload,
        evidence_refs=[r.record_id for r in result.evidence],
        status="ok" if result.status == "ok" else "tool_error")
    if result.status != "ok":
        observation.payload = result.error
    return observation, result.evidence, path


def _write_artifacts(session_dir: str, shared_memory: SharedMemory,
                     report: str):
    os.makedirs(session_dir, exist_ok=True)
    trace_path = os.path.join(session_dir, "trace.jsonl")
    with open(trace_path, "w", encoding="utf-8") as fh:
        for entry in shared_memory.entries:
            fh.write(json.dumps(entry.to_dict(), ensure_ascii=False,
                                sort_keys=True, default=str) + "\n")
    with open(os.path.join(session_dir, "report.md"), "w",
              encoding="utf-8") as fh:
        fh.write(report)


def run_session(question, config: SessionConfig, registry: AgentRegistry,
                backends: Backends, attempt_index: int = 1,
                robots=None, session_dir: str = "") -> RunResult:
    """Run the manager loop over one question.

    Terminates within max_steps planner iterations. Artifacts (trace.jsonl,
    report.md) land in session_dir, defaulting to
    output_dir/<question_id>/; pass an explicit session_dir for benchmark
    attempt subdirectories. The attempt index seeds the session id
    <question_id>-a<attempt>.
    """
    config.validate()
    session_id = f"{question.id}-a{attempt_index}"
    shared_memory = SharedMemory()
    attachments = _check_attachments(question, shared_memory)
    if not session_dir:
        session_dir = (os.path.join(config.output_dir, question.id)
                       if config.output_dir else "")
    workspace = session_dir or "."
    toolbox = Toolbox(backends, workspace_dir=workspace, robots=robots,
                      transport_retries=config.per_tool_call_budget)

    def source_fetcher(url: str) -> str:
        cached = toolbox.fetch_cache.get(url)
        if cached is not None:
            return cached.text
        resp = backends.require("fetch").fetch(url)
        if resp.status >= 400:
            raise ToolError(f"HTTP {resp.status}")
        ctype = resp.content_type.split(";")[0].strip().lower()
        if ctype.startswith("text/html") or ctype.endswith("xhtml+xml"):
            title, text = extract_text(resp.text())
        else:
            title, text = "", resp.text()
        page = PageContent(url=url, title=title, text=text,
                           fetched_at=backends.clock.now_iso())
        toolbox.fetch_cache.put(url, page)
        return text

    started = backends.clock.monotonic()
    status = STATUS_BUDGET_EXHAUSTED
    model = backends.require(config.model_backend)

    while len(shared_memory.entries) < config.max_steps:
        try:
            step = plan_next_action(shared_memory.entries, shared_memory,
                                    config, backends, question, registry)
        except PlanParseError as exc:
            shared_memory.warnings.append(f"planner failure: {exc}")
            status = STATUS_FAILED
            break
        except BackendError as exc:
            shared_memory.warnings.append(
                f"planner backend unreachable: {exc}")
            status = STATUS_FAILED
            break

        if step.is_final():
            shared_memory.planner_answer = str(step.arguments.get("answer", ""))
            shared_memory.planner_justification = step.rationale
            observation = Observation(step_ref=step.step_index,
                                      payload=shared_memory.planner_answer,
                                      status="ok")
            shared_memory.append(TraceEntry(step=step, observation=observation,
                                            path="final"))
            status = STATUS_ANSWERED
            break

        observation, evidence, path = _dispatch(
            step, question, registry, backends, toolbox, config, attachments)
        validation = None
        if observation.status == "ok" and evidence:
            validation = validate_evidence(observation, source_fetcher,
                                           records=evidence)
            passed = [record.record_id for record in evidence
                      if validation.record_passes(record)]
            shared_memory.mark_validated(passed)
            if len(passed) < len(evidence):
                observation.status = "validation_failed"
        shared_memory.append(TraceEntry(step=step, observation=observation,
                                        evidence=evidence, path=path,
                                        validation=validation))

    final_answer, report = synthesize_answer(shared_memory, question,
                                             model=model)
    if status == STATUS_ANSWERED and not final_answer:
        status = STATUS_FAILED
    result = RunResult(
        question_id=question.id,
        final_answer=final_answer if status == STATUS_ANSWERED else "",
        trace=shared_memory.entries,
        summary_report=report,
        status=status,
        wall_time=backends.clock.monotonic() - started,
        session_id=session_id,
    )
    # Re-render so the report reflects the definitive status and answer.
    result.summary_report = render_summary_report(
        result, warnings=shared_memory.warnings,
        validated_ids=shared_memory.validated_ids)
    if session_dir:
        _write_artifacts(session_dir, shared_memory, result.summary_report)
    return result
