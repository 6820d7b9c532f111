"""Record/replay cassettes for backend calls.

A cassette is a directory of numbered entries: ``NNNN.key`` holds the
canonical request key, ``NNNN.body`` the response bytes, and an optional
``NNNN.meta.json`` carries status and content type. Replay backends resolve
requests by exact key match, so a suite backed by cassettes performs zero
network access.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Optional

from clio.backends import (
    ArchiveBackend,
    BookIndexBackend,
    FetchBackend,
    FetchResponse,
    ModelBackend,
    PublisherBackend,
    ReverseImageBackend,
    ScholarBackend,
    SearchBackend,
)
from clio.errors import BackendError


class Cassette:
    """One directory of request-key/response-body entry pairs."""

    def __init__(self, directory):
        self.directory = str(directory)
        self._lock = threading.Lock()
        self._index: Optional[dict] = None

    def _load_index(self) -> dict:
        if self._index is None:
            index = {}
            if os.path.isdir(self.directory):
                for name in sorted(os.listdir(self.directory)):
                    if not name.endswith(".key"):
                        continue
                    entry = name[: -len(".key")]
                    with open(os.path.join(self.directory, name), encoding="utf-8") as fh:
                        key = fh.read()
                    index[key] = entry
            self._index = index
        return self._index

    def lookup(self, key: str) -> tuple[bytes, dict]:
        """Return (body, meta) for a recorded key; KeyError when absent."""
        entry = self._load_index()[key]
        with open(os.path.join(self.directory, entry + ".body"), "rb") as fh:
            body = fh.read()
        meta_path = os.path.join(self.directory, entry + ".meta.json")
        meta = {}
        if os.path.exists(meta_path):
            with open(meta_path, encoding="utf-8") as fh:
                meta = json.load(fh)
        return body, meta

    def record(self, key: str, body: bytes, meta: Optional[dict] = None):
        with self._lock:
            os.makedirs(self.directory, exist_ok=True)
            index = self._load_index()
            if key in index:
                entry = index[key]
            else:
                entry = f"{len(index):04d}"
                index[key] = entry
                with open(os.path.join(self.directory, entry + ".key"), "w",
                          encoding="utf-8") as fh:
                    fh.write(key)
            with open(os.path.join(self.directory, entry + ".body"), "wb") as fh:
                fh.write(body)
            if meta:
                with open(os.path.join(self.directory, entry + ".meta.json"), "w",
                          encoding="utf-8") as fh:
                    json.dump(meta, fh, sort_keys=True)

    def __contains__(self, key: str) -> bool:
        return key in self._load_index()


def _miss(kind: str, key: str):
    raise BackendError(f"cassette miss for {kind}: {key!r}")


class ReplaySearchBackend(SearchBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette
        self.calls: list[str] = []

    def search(self, query: str) -> list[dict]:
        self.calls.append(query)
        key = f"search:{query}"
        if key not in self.cassette:
            _miss("search", query)
        body, _ = self.cassette.lookup(key)
        return json.loads(body.decode("utf-8"))


class ReplayFetchBackend(FetchBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette
        self.calls: list[str] = []

    def fetch(self, url: str) -> FetchResponse:
        self.calls.append(url)
        key = f"fetch:{url}"
        if key not in self.cassette:
            _miss("fetch", url)
        body, meta = self.cassette.lookup(key)
        return FetchResponse(
            url=url,
            status=int(meta.get("status", 200)),
            content_type=meta.get("content_type", "text/html"),
            body=body,
            final_url=meta.get("final_url", url),
        )


class ReplayArchiveBackend(ArchiveBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def snapshots(self, url: str) -> list[tuple[str, str]]:
        key = f"archive:{url}"
        if key not in self.cassette:
            return []
        body, _ = self.cassette.lookup(key)
        return [tuple(item) for item in json.loads(body.decode("utf-8"))]


class ReplayScholarBackend(ScholarBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette
        self.calls: list[tuple[str, int]] = []

    def search(self, query: str, limit: int = 10) -> list[dict]:
        self.calls.append((query, limit))
        key = f"scholar:{query}"
        if key not in self.cassette:
            _miss("scholar", query)
        body, _ = self.cassette.lookup(key)
        return json.loads(body.decode("utf-8"))[:limit]


class ReplayBookIndexBackend(BookIndexBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette
        self.calls: list[tuple[str, str]] = []

    def search(self, phrase: str, domain: str = "") -> list[dict]:
        self.calls.append((phrase, domain))
        key = f"book:{phrase}"
        if key not in self.cassette:
            _miss("book", phrase)
        body, _ = self.cassette.lookup(key)
        return json.loads(body.decode("utf-8"))


class ReplayPublisherBackend(PublisherBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def structured_search(self, fields: dict) -> list[dict]:
        key = "publisher:" + json.dumps(fields, sort_keys=True)
        if key not in self.cassette:
            _miss("publisher", key)
        body, _ = self.cassette.lookup(key)
        return json.loads(body.decode("utf-8"))


class ReplayReverseImageBackend(ReverseImageBackend):
    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def search(self, image_url: str) -> list[dict]:
        key = f"image_match:{image_url}"
        if key not in self.cassette:
            _miss("image_match", image_url)
        body, _ = self.cassette.lookup(key)
        return json.loads(body.decode("utf-8"))


class ReplayModelBackend(ModelBackend):
    """Sequential scripted replies loaded from a JSON array file."""

    def __init__(self, replies_path, repeat_last=False):
        with open(replies_path, encoding="utf-8") as fh:
            self.replies = json.load(fh)
        if not isinstance(self.replies, list):
            raise BackendError(f"reply fixture {replies_path} must hold a JSON array")
        self.repeat_last = repeat_last
        self._cursor = 0
        self.calls: list[str] = []

    def complete(self, prompt: str, temperature: float = 0.0) -> str:
        self.calls.append(prompt)
        if self._cursor >= len(self.replies):
            if self.repeat_last and self.replies:
                return self.replies[-1]
            raise BackendError("replay model backend exhausted its replies")
        reply = self.replies[self._cursor]
        self._cursor += 1
        return reply


class RecordingFetchBackend(FetchBackend):
    """Wraps a live fetch backend, writing every response into a cassette."""

    def __init__(self, inner: FetchBackend, cassette: Cassette):
        self.inner = inner
        self.cassette = cassette

    def fetch(self, url: str) -> FetchResponse:
        resp = self.inner.fetch(url)
        self.cassette.record(
            f"fetch:{url}",
            resp.body,
            {"status": resp.status, "content_type": resp.content_type,
             "final_url": resp.final_url},
        )
        return resp
