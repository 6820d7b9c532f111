"""robots.txt policy checks with a small on-disk cache."""

from __future__ import annotations

import hashlib
import json
import os
import time
import urllib.parse
import urllib.robotparser
from typing import Optional

from clio.errors import BackendError

DEFAULT_TTL_SECONDS = 24 * 3600


class RobotsPolicy:
    """Answers "may this agent fetch this URL" from each host's robots.txt.

    Rules are cached per host. An unreachable or missing robots.txt means
    the host is treated as fully allowed; an explicit Disallow for our
    user agent is honored.
    """

    def __init__(self, fetch_backend, cache_dir: Optional[str] = None,
                 ttl_seconds: float = DEFAULT_TTL_SECONDS,
                 user_agent: str = "clio-research"):
        self.fetch_backend = fetch_backend
        self.cache_dir = str(cache_dir) if cache_dir else None
        self.ttl_seconds = ttl_seconds
        self.user_agent = user_agent
        self._parsers: dict[str, urllib.robotparser.RobotFileParser] = {}

    def _cache_path(self, host: str) -> Optional[str]:
        if not self.cache_dir:
            return None
        digest = hashlib.sha256(host.encode("utf-8")).hexdigest()[:16]
        return os.path.join(self.cache_dir, f"robots-{digest}.json")

    def _load_rules(self, scheme: str, host: str) -> str:
        path = self._cache_path(host)
        if path and os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
            if time.time() - entry["stamp"] < self.ttl_seconds:
                return entry["rules"]
        rules = ""
        try:
            resp = self.fetch_backend.fetch(f"{scheme}://{host}/robots.txt")
            if resp.status == 200:
                rules = resp.body.decode("utf-8", errors="replace")
        except BackendError:
            rules = ""
        if path:
            os.makedirs(self.cache_dir, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                json.dump({"stamp": time.time(), "rules": rules}, fh)
        return rules

    def allowed(self, url: str) -> bool:
        parsed = urllib.parse.urlparse(url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            return True
        host = parsed.netloc
        if host not in self._parsers:
            parser = urllib.robotparser.RobotFileParser()
            parser.parse(self._load_rules(parsed.scheme, host).splitlines())
            self._parsers[host] = parser
        return self._parsers[host].can_fetch(self.user_agent, url)


class AllowAllRobots:
    """Stand-in policy for offline runs with no robots data."""

    def allowed(self, url: str) -> bool:
        return True


class DenyListRobots:
    """Test policy: deny exact URLs or whole hosts."""

    def __init__(self, denied_urls=(), denied_hosts=()):
        self.denied_urls = set(denied_urls)
        self.denied_hosts = set(denied_hosts)

    def allowed(self, url: str) -> bool:
        if url in self.denied_urls:
            return False
        host = urllib.parse.urlparse(url).netloc
        return host not in self.denied_hosts
