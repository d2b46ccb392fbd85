"""LLM provider access: live HTTP or scripted fixtures.

Scripted mode is the replay/test path: each request resolves to a fixture
file named by a stable content hash of the rendered messages, so identical
prompts yield identical bytes across process restarts, and any prompt
drift surfaces loudly as a missing fixture instead of a silently
misaligned reply.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import FixtureMissing, ProviderUnavailable

Message = tuple[str, str]

MODES = ("live", "scripted")


@dataclass(frozen=True)
class ProviderConfig:
    mode: str
    model_name: str = ""
    endpoint: str = ""
    credential_ref: str = ""
    max_retries: int = 2
    fixture_dir: str = ""

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"provider mode must be one of {MODES}, got {self.mode!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "model_name": self.model_name,
            "endpoint": self.endpoint,
            "credential_ref": self.credential_ref,
            "max_retries": self.max_retries,
            "fixture_dir": self.fixture_dir,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProviderConfig":
        return cls(
            mode=d["mode"],
            model_name=d.get("model_name", ""),
            endpoint=d.get("endpoint", ""),
            credential_ref=d.get("credential_ref", ""),
            max_retries=d.get("max_retries", 2),
            fixture_dir=d.get("fixture_dir", ""),
        )


def request_hash(messages: list[Message]) -> str:
    """Stable content hash of a rendered message list."""
    canonical = json.dumps(
        [{"role": role, "content": content} for role, content in messages],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def fixture_path(fixture_dir: str | Path, digest: str) -> Path:
    return Path(fixture_dir) / f"{digest}.txt"


def _complete_scripted(messages: list[Message], config: ProviderConfig) -> str:
    digest = request_hash(messages)
    path = fixture_path(config.fixture_dir, digest)
    try:
        return path.read_text(encoding="utf-8")
    except OSError:
        raise FixtureMissing(digest, str(config.fixture_dir)) from None


def _complete_live(messages: list[Message], config: ProviderConfig) -> str:
    import httpx

    digest = request_hash(messages)
    headers = {}
    if config.credential_ref:
        key = os.environ.get(config.credential_ref)
        if not key:
            raise ProviderUnavailable(
                f"credential variable {config.credential_ref} is not set", digest
            )
        headers["Authorization"] = f"Bearer {key}"
    payload = {
        "model": config.model_name,
        "messages": [{"role": r, "content": c} for r, c in messages],
    }
    try:
        resp = httpx.post(config.endpoint, json=payload, headers=headers, timeout=120.0)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]
    except ProviderUnavailable:
        raise
    except Exception as exc:
        raise ProviderUnavailable(str(exc), digest) from exc


def complete(messages: list[Message], config: ProviderConfig) -> str:
    """Raw completion text for a rendered message list."""
    if config.mode == "scripted":
        return _complete_scripted(messages, config)
    return _complete_live(messages, config)
