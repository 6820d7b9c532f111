"""Four-section summary reports rendered from a session trace.

The heading strings are part of the artifact contract: consumers key on
them byte for byte, so they live here as constants and everything else
builds around them.
"""

from __future__ import annotations

from typing import Optional

SECTION_1_HEADING = "## 1. Tools Used and How They Were Used"
SECTION_2_HEADING = "## 2. Detailed Information Sources"
SECTION_3_HEADING = "## 3. Reasoning Process and Logic Steps"
SECTION_4_HEADING = "## 4. Answer Quality and Reliability Analysis"

REPORT_HEADINGS = (SECTION_1_HEADING, SECTION_2_HEADING,
                   SECTION_3_HEADING, SECTION_4_HEADING)

_TIER_CREDIBILITY = {
    "book_index": "Book index snippet; page-level provenance.",
    "scholar_index": "Scholarly index; peer-reviewed or academically vetted.",
    "publisher_api": "Publisher API metadata; authoritative bibliographic data.",
    "general_web": "General web source; credibility depends on the site.",
}


def _entry_dicts(trace) -> list[dict]:
    entries = []
    for entry in trace:
        if hasattr(entry, "to_dict"):
            entries.append(entry.to_dict())
        else:
            entries.append(entry)
    return entries


def _summarize_arguments(arguments: dict) -> str:
    if not arguments:
        return "no arguments"
    parts = []
    for key, value in arguments.items():
        text = str(value)
        if len(text) > 80:
            text = text[:77] + "..."
        parts.append(f"{key}={text}")
    return ", ".join(parts)


def _excerpt(value, limit: int = 160) -> str:
    text = str(value)
    text = " ".join(text.split())
    if len(text) > limit:
        text = text[:limit - 3] + "..."
    return text


def collect_evidence(trace) -> list[dict]:
    """Evidence record dicts from a trace, in first-seen order."""
    records: dict[str, dict] = {}
    for entry in _entry_dicts(trace):
        for record in entry.get("evidence", []):
            record_id = record.get("record_id", "")
            if record_id and record_id not in records:
                records[record_id] = record
    return list(records.values())


def infer_citable_ids(trace) -> set[str]:
    """Record ids whose validation stands, from the trace's own blocks.

    Records in entries without a validation block count as citable;
    a block that marks a record failed excludes it.
    """
    citable: set[str] = set()
    for entry in _entry_dicts(trace):
        validation = entry.get("validation")
        quote_ok = (validation or {}).get("quote_exactness", {})
        bib_ok = (validation or {}).get("bib_completeness", {})
        for record in entry.get("evidence", []):
            record_id = record.get("record_id", "")
            if not record_id:
                continue
            if validation is None:
                citable.add(record_id)
            elif record.get("quote"):
                if quote_ok.get(record_id, False):
                    citable.add(record_id)
            elif bib_ok.get(record_id, False):
                citable.add(record_id)
    return citable


def render_summary_report(run_result, warnings: Optional[list[str]] = None,
                          validated_ids: Optional[set] = None) -> str:
    """Render the four-section report from a run's trace and evidence.

    run_result needs question_id, final_answer, status, and a trace of
    step entries (objects with to_dict or plain dicts). Section 2 lists
    every source consulted, flagging failed validations; the synthesis
    citations and the reliability grade rest only on validated records
    (validated_ids when given, else inferred from the trace). Zero
    validated evidence drops reliability to Low with an explicit note.
    """
    entries = _entry_dicts(run_result.trace)
    evidence = collect_evidence(run_result.trace)
    if validated_ids is None:
        validated_ids = infer_citable_ids(run_result.trace)
    cited = [record for record in evidence
             if record.get("record_id") in validated_ids]
    warnings = list(warnings or [])
    lines: list[str] = []
    lines.append("# Summary Report")
    lines.append("")
    lines.append(f"Question ID: {run_result.question_id}")
    answer = run_result.final_answer if run_result.final_answer else "(none)"
    lines.append(f"Final Answer: {answer}")
    lines.append(f"Status: {run_result.status}")
    lines.append("")

    # Section 1: one entry per acting step, in trace order.
    lines.append(SECTION_1_HEADING)
    lines.append("")
    acting = [entry for entry in entries
              if entry.get("path") in ("tool", "agent", "expression")]
    if not acting:
        lines.append("- No tools were invoked in this session.")
    for entry in acting:
        step = entry.get("step", {})
        observation = entry.get("observation", {})
        target = step.get("target", "?")
        lines.append(f"- **{target}** (step {step.get('step_index', '?')})")
        rationale = step.get("rationale", "")
        if rationale:
            lines.append(f"  - Purpose: {_excerpt(rationale)}")
        lines.append(
            f"  - Method: called with {_summarize_arguments(step.get('arguments', {}))}")
        status = observation.get("status", "?")
        if status == "ok":
            lines.append(f"  - Result: {_excerpt(observation.get('payload', ''))}")
        else:
            lines.append(f"  - Result: {status}: "
                         f"{_excerpt(observation.get('payload', ''))}")
    lines.append("")

    # Section 2: every evidence record with its locator and quote.
    lines.append(SECTION_2_HEADING)
    lines.append("")
    if not evidence:
        lines.append("- No sources were collected.")
    for record in evidence:
        bib = record.get("bib", {})
        title = bib.get("title") or record.get("url") or record.get("record_id")
        lines.append(f"- **{title}** [{record.get('record_id', '?')}]")
        if record.get("url"):
            lines.append(f"  - URL: {record['url']}")
        elif bib.get("venue") or bib.get("year"):
            locator = ", ".join(str(part) for part in (bib.get("venue"),
                                                       bib.get("year")) if part)
            lines.append(f"  - Located in: {locator}")
        if record.get("quote"):
            lines.append(f"  - Quote: \"{_excerpt(record['quote'], 240)}\"")
        tier = record.get("tier", "")
        credibility = _TIER_CREDIBILITY.get(tier, "Unclassified source.")
        lines.append(f"  - Credibility: {credibility}")
        if record.get("record_id") not in validated_ids:
            lines.append("  - Validation: failed; excluded from synthesis.")
    lines.append("")

    # Section 3: the planner's reasoning chain, then synthesis.
    lines.append(SECTION_3_HEADING)
    lines.append("")
    for entry in entries:
        step = entry.get("step", {})
        rationale = step.get("rationale", "")
        if entry.get("path") == "final":
            continue
        if rationale:
            lines.append(f"- Step {step.get('step_index', '?')}: "
                         f"{_excerpt(rationale, 200)}")
    tiers = {record.get("tier") for record in cited if record.get("tier")}
    if len(cited) >= 2 and len(tiers) >= 2:
        ids = ", ".join(record.get("record_id", "?") for record in cited[:4])
        lines.append(f"- Cross-verification: findings corroborated across "
                     f"{len(tiers)} source tiers ({ids}).")
    if run_result.final_answer:
        citations = ", ".join(record.get("record_id", "?")
                              for record in cited[:4])
        if citations:
            lines.append(f"- Synthesis: final answer "
                         f"\"{_excerpt(run_result.final_answer, 120)}\" rests on "
                         f"[{citations}].")
        else:
            lines.append(f"- Synthesis: final answer "
                         f"\"{_excerpt(run_result.final_answer, 120)}\" was stated "
                         f"by the planner without collected sources.")
    lines.append("")

    # Section 4: reliability grade plus any degradation warnings.
    lines.append(SECTION_4_HEADING)
    lines.append("")
    if not cited:
        lines.append("- Reliability: Low")
        lines.append("  - Zero sources were cited; the answer rests on the "
                      "planner's unsupported statement.")
    elif len(tiers) >= 2:
        lines.append("- Reliability: High")
        lines.append(f"  - {len(cited)} sources across {len(tiers)} "
                      "independent tiers corroborate the answer.")
    else:
        lines.append("- Reliability: Medium")
        lines.append(f"  - {len(cited)} source(s) from a single tier "
                      "support the answer; independent corroboration is "
                      "missing.")
    if run_result.status != "answered":
        lines.append(f"- Termination: session ended with status "
                      f"{run_result.status}.")
    for warning in warnings:
        lines.append(f"- Warning: {warning}")
    lines.append("")
    return "\n".join(lines)
