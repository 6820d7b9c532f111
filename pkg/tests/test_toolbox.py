"""Toolbox dispatch: registry totality, diagnostics, retries, evidence ids."""

import pytest

from clio.backends import (
    SearchBackend,
    StaticFetchBackend,
    StaticSearchBackend,
    offline_backends,
)
from clio.errors import RateLimited
from clio.tools import TOOL_REGISTRY, Toolbox, resolve_tool


def test_registry_lists_all_tools_and_every_entry_is_implemented():
    assert len(TOOL_REGISTRY) == 36
    box = Toolbox(offline_backends())
    for tool_id, method_name in TOOL_REGISTRY.items():
        assert resolve_tool(tool_id)
        method = getattr(box, method_name, None)
        assert callable(method), f"{tool_id} -> {method_name} missing"


def test_frame_extraction_aliases_share_an_implementation():
    assert TOOL_REGISTRY["extract_video_frames"] == TOOL_REGISTRY["extract_frames"]


def test_unknown_tool_reports_instead_of_raising():
    box = Toolbox(offline_backends())
    result = box.call("summon_demon", path="x")
    assert result.status == "tool_error"
    assert "unknown tool" in result.error
    assert box.calls == [{"tool": "summon_demon", "arguments": {"path": "x"},
                          "status": "tool_error",
                          "error": "unknown tool: summon_demon"}]


def test_diagnostics_log_every_call_in_order():
    backends = offline_backends(search=StaticSearchBackend(default=[
        {"title": "T", "url": "https://x.example/a", "snippet": "s"}]))
    box = Toolbox(backends)
    box.call("web_search", query="alpha")
    box.call("web_search", query="beta")
    box.call("no_such_tool")
    assert [(c["tool"], c["status"]) for c in box.calls] == [
        ("web_search", "ok"), ("web_search", "ok"),
        ("no_such_tool", "tool_error")]
    assert box.calls[0]["arguments"] == {"query": "alpha"}


def test_tool_failures_are_recorded_in_the_call_log():
    box = Toolbox(offline_backends(fetch=StaticFetchBackend()))
    result = box.call("visit_page", url="https://gone.example/x")
    assert result.status == "tool_error"
    assert box.calls[0]["status"] == "tool_error"
    assert box.calls[0]["error"] == result.error


class FlakySearch(SearchBackend):
    """Rate-limits a fixed number of calls before succeeding."""

    def __init__(self, failures):
        self.failures = failures
        self.calls = 0

    def search(self, query):
        self.calls += 1
        if self.calls <= self.failures:
            raise RateLimited("slow down")
        return [{"title": "T", "url": "https://x.example/ok", "snippet": "s"}]


def test_rate_limits_are_retried_with_backoff():
    sleeps = []
    search = FlakySearch(failures=2)
    backends = offline_backends(search=search, sleep=sleeps.append)
    box = Toolbox(backends, transport_retries=3)
    result = box.call("web_search", query="q")
    assert result.status == "ok"
    assert search.calls == 3
    assert sleeps == [1, 2]


def test_rate_limit_budget_exhaustion_becomes_tool_error():
    search = FlakySearch(failures=10)
    backends = offline_backends(search=search, sleep=lambda _s: None)
    box = Toolbox(backends, transport_retries=2)
    result = box.call("web_search", query="q")
    assert result.status == "tool_error"
    assert "slow down" in result.error
    assert search.calls == 3


def test_non_transport_failures_are_not_retried():
    fetch = StaticFetchBackend()
    box = Toolbox(offline_backends(fetch=fetch))
    box.call("visit_page", url="https://gone.example/x")
    assert fetch.calls == ["https://gone.example/x"]


def test_bad_arguments_become_tool_errors():
    box = Toolbox(offline_backends())
    result = box.call("web_search", query="   ")
    assert result.status == "tool_error"
    assert "query" in result.error


def test_paging_without_an_open_page_is_a_tool_error():
    box = Toolbox(offline_backends())
    for tool_id in ("page_up", "page_down", "find_next"):
        result = box.call(tool_id)
        assert result.status == "tool_error", tool_id


def test_evidence_ids_are_sequential_across_tools():
    backends = offline_backends(
        search=StaticSearchBackend(default=[
            {"title": "A", "url": "https://x.example/a", "snippet": "sa"},
            {"title": "B", "url": "https://x.example/b", "snippet": "sb"}]),
        fetch=StaticFetchBackend({
            "https://x.example/a":
            "<html><title>A</title><body>alpha</body></html>"}))
    box = Toolbox(backends)
    first = box.call("web_search", query="q")
    second = box.call("visit_page", url="https://x.example/a")
    ids = [r.record_id for r in first.evidence + second.evidence]
    assert ids == ["ev-0001", "ev-0002", "ev-0003"]
    assert len(set(ids)) == len(ids)


def test_custom_id_allocator_is_honored():
    names = iter(f"custom-{i}" for i in range(1, 10))
    backends = offline_backends(search=StaticSearchBackend(default=[
        {"title": "A", "url": "https://x.example/a", "snippet": "sa"}]))
    box = Toolbox(backends, id_alloc=lambda: next(names))
    result = box.call("web_search", query="q")
    assert result.evidence[0].record_id == "custom-1"


def test_result_tool_id_matches_the_requested_tool():
    backends = offline_backends(search=StaticSearchBackend())
    box = Toolbox(backends)
    assert box.call("general_web_search", query="q").tool_id == "general_web_search"
