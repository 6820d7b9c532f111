import pytest

from clio.backends import (
    BACKOFF_SCHEDULE,
    FetchResponse,
    LogicalClock,
    ScriptedAsrBackend,
    ScriptedModelBackend,
    StaticBookIndexBackend,
    StaticFetchBackend,
    StaticPublisherBackend,
    StaticSearchBackend,
    offline_backends,
    with_retries,
)
from clio.errors import (
    AgentUnavailable,
    BackendError,
    QuotaExceeded,
    RobotsDisallowed,
)


def test_with_retries_backs_off_one_two_four_seconds():
    sleeps = []
    attempts = []

    def flaky():
        attempts.append(1)
        if len(attempts) < 4:
            raise BackendError("transient")
        return "ok"

    assert with_retries(flaky, sleep=sleeps.append) == "ok"
    assert sleeps == list(BACKOFF_SCHEDULE) == [1.0, 2.0, 4.0]


def test_with_retries_gives_up_after_schedule():
    def always_down():
        raise BackendError("down")

    with pytest.raises(BackendError):
        with_retries(always_down, sleep=lambda _s: None)


def test_with_retries_does_not_catch_other_errors():
    def boom():
        raise ValueError("not transport")

    sleeps = []
    with pytest.raises(ValueError):
        with_retries(boom, sleep=sleeps.append)
    assert sleeps == []


def test_scripted_model_replies_in_order_then_errors():
    model = ScriptedModelBackend(["a", "b"])
    assert model.complete("x") == "a"
    assert model.complete("y") == "b"
    with pytest.raises(BackendError):
        model.complete("z")
    assert model.calls == ["x", "y", "z"]


def test_scripted_model_repeat_last():
    model = ScriptedModelBackend(["only"], repeat_last=True)
    assert model.complete("1") == "only"
    assert model.complete("2") == "only"


def test_static_fetch_unknown_url_is_404():
    fetch = StaticFetchBackend()
    resp = fetch.fetch("https://nowhere.example/x")
    assert resp.status == 404


def test_fetch_response_decodes_text():
    resp = FetchResponse(url="u", body="héllo".encode("utf-8"))
    assert resp.text() == "héllo"


def test_static_book_index_can_simulate_robots_block():
    backend = StaticBookIndexBackend(robots_blocked=True)
    with pytest.raises(RobotsDisallowed):
        backend.search("anything")


def test_static_publisher_can_simulate_quota():
    backend = StaticPublisherBackend(quota_exceeded=True)
    with pytest.raises(QuotaExceeded):
        backend.structured_search({"title": "t"})


def test_scripted_asr_fallback_describes_payload_size():
    asr = ScriptedAsrBackend()
    assert asr.transcribe(b"12345") == "[5 bytes]"


def test_logical_clock_advances_one_second_per_reading():
    clock = LogicalClock()
    assert clock.now_iso() == "1970-01-01T00:00:00Z"
    assert clock.now_iso() == "1970-01-01T00:00:01Z"
    assert clock.monotonic() < clock.monotonic()


def test_offline_backends_require_unknown_name():
    backends = offline_backends()
    with pytest.raises(AgentUnavailable):
        backends.require("no_such_backend")
    assert backends.require("model") is backends.model


def test_offline_backends_sleep_is_inert():
    backends = offline_backends()
    backends.sleep(10_000)  # must not block


def test_live_backends_refuse_to_build_without_credentials(monkeypatch):
    from clio.backends import LiveModelBackend, LiveSearchBackend

    monkeypatch.delenv("LLM_API_KEY", raising=False)
    monkeypatch.delenv("SEARCH_API_KEY", raising=False)
    with pytest.raises(AgentUnavailable):
        LiveModelBackend("some-model")
    with pytest.raises(AgentUnavailable):
        LiveSearchBackend()


def test_static_search_returns_copies():
    backend = StaticSearchBackend({"q": [{"title": "t"}]})
    first = backend.search("q")
    first[0]["title"] = "mutated"
    assert backend.search("q")[0]["title"] == "t"
