"""Layered run configuration: flags over environment over file over defaults.

Credentials never travel through this module. They are read from the
environment by the backends that need them, and the scrub filter below
keeps their values out of anything we log.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, fields

from clio.errors import ConfigError

MODE_LIVE = "live"
MODE_REPLAY = "replay"

# Environment variables that hold secrets. Values of these must never be
# echoed into logs, traces, or reports.
CREDENTIAL_ENV_KEYS = (
    "LLM_API_KEY",
    "JUDGE_API_KEY",
    "SEARCH_API_KEY",
    "PUBLISHER_API_KEY",
    "OCR_API_KEY",
    "IMAGE_HOST_KEY",
    "ASR_API_KEY",
)

# Non-secret settings may come from the environment under these names.
_ENV_SETTINGS = {
    "CLIO_DATASET": "dataset",
    "CLIO_QUESTION_ID": "question_id",
    "CLIO_MODEL": "model",
    "CLIO_JUDGE_MODEL": "judge_model",
    "CLIO_PASS_K": "pass_k",
    "CLIO_MAX_STEPS": "max_steps",
    "CLIO_OUTPUT_DIR": "output_dir",
    "CLIO_MODE": "mode",
    "CLIO_FIXTURE_DIR": "fixture_dir",
    "CLIO_WORKERS": "workers",
    "CLIO_TIMEOUT": "timeout",
}

_INT_FIELDS = {"pass_k", "max_steps", "workers", "replan_interval",
               "per_tool_call_budget", "random_seed"}
_FLOAT_FIELDS = {"timeout"}
_BOOL_FIELDS = {"force"}


@dataclass
class CliConfig:
    dataset: str = ""
    question_id: str = ""
    model: str = "gpt-4o"
    judge_model: str = "gpt-4o"
    pass_k: int = 1
    max_steps: int = 20
    replan_interval: int = 5
    per_tool_call_budget: int = 3
    random_seed: int = 0
    output_dir: str = "runs"
    mode: str = MODE_LIVE
    fixture_dir: str = ""
    force: bool = False
    workers: int = 4
    timeout: float | None = None

    def validate(self):
        if self.pass_k < 1:
            raise ConfigError("pass_k must be at least 1", key="pass_k")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1", key="max_steps")
        if not 1 <= self.replan_interval <= self.max_steps:
            raise ConfigError("replan_interval must be in [1, max_steps]",
                              key="replan_interval")
        if self.per_tool_call_budget < 1:
            raise ConfigError("per_tool_call_budget must be at least 1",
                              key="per_tool_call_budget")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1", key="workers")
        if self.mode not in (MODE_LIVE, MODE_REPLAY):
            raise ConfigError(
                f"mode must be '{MODE_LIVE}' or '{MODE_REPLAY}', got {self.mode!r}",
                key="mode")
        if self.mode == MODE_REPLAY and not self.fixture_dir:
            raise ConfigError("replay mode requires fixture_dir",
                              key="fixture_dir")
        if self.timeout is not None and self.timeout <= 0:
            raise ConfigError("timeout must be positive", key="timeout")


_FIELD_NAMES = {f.name for f in fields(CliConfig)}


def _coerce(key: str, value, source: str):
    if key in _INT_FIELDS:
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{source} value for {key} is not an integer: {value!r}",
                key=key)
    if key in _FLOAT_FIELDS:
        if value is None:
            return None
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"{source} value for {key} is not a number: {value!r}",
                key=key)
    if key in _BOOL_FIELDS:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{source} value for {key} is not a boolean: {value!r}",
                          key=key)
    return str(value)


def _read_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}",
                          key="config_file")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}",
                          key="config_file")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object",
                          key="config_file")
    return data


def load_config(flag_values: dict | None = None,
                env: dict | None = None,
                config_path: str = "") -> CliConfig:
    """Merge configuration layers and validate the result.

    Precedence, highest first: command-line flags, environment, config
    file, built-in defaults. Unknown file keys and credential names in a
    file or flags raise ConfigError naming the offending key.
    """
    env = os.environ if env is None else env
    merged: dict = {}

    if config_path:
        for key, value in _read_config_file(config_path).items():
            if key in CREDENTIAL_ENV_KEYS:
                raise ConfigError(
                    f"credential {key} must come from the environment, "
                    "not a config file", key=key)
            if key not in _FIELD_NAMES:
                raise ConfigError(f"unknown config file key: {key}", key=key)
            merged[key] = _coerce(key, value, "config file")

    for env_name, key in _ENV_SETTINGS.items():
        if env_name in env and env[env_name] != "":
            merged[key] = _coerce(key, env[env_name], "environment")

    for key, value in (flag_values or {}).items():
        if value is None:
            continue
        if key in CREDENTIAL_ENV_KEYS:
            raise ConfigError(
                f"credential {key} must come from the environment, not a flag",
                key=key)
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown configuration key: {key}", key=key)
        merged[key] = _coerce(key, value, "flag")

    config = CliConfig(**merged)
    if "replan_interval" not in merged:
        # The default checkpoint cadence follows a smaller step budget.
        config.replan_interval = min(config.replan_interval, config.max_steps)
    config.validate()
    return config


def scrub_text(text: str, env: dict | None = None) -> str:
    """Replace any credential value occurring in text with a placeholder."""
    env = os.environ if env is None else env
    for key in CREDENTIAL_ENV_KEYS:
        value = env.get(key, "")
        if value:
            text = text.replace(value, "***")
    return text


class CredentialScrubFilter(logging.Filter):
    """Logging filter that blanks credential values in emitted records."""

    def __init__(self, env: dict | None = None):
        super().__init__()
        self._env = env

    def filter(self, record: logging.LogRecord) -> bool:
        message = record.getMessage()
        scrubbed = scrub_text(message, self._env)
        if scrubbed != message:
            record.msg = scrubbed
            record.args = ()
        return True
