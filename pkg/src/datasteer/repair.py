"""Completion with format repair.

When a response fails to parse, the request is reissued with the failed
response and a corrective instruction appended, up to the configured retry
budget. Every raw attempt is kept: an unparseable exchange is surfaced to
the user in full, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blocks import (
    KIND_ANSWER,
    KIND_ASSUMPTIONS,
    KIND_CODE,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_COMPLETION,
    KIND_PLAN,
    ParsedBlock,
)
from .errors import ParseError, UnparseableAfterRetries
from .parsing import parse_block
from .provider import Message, ProviderConfig, complete
from .templates import PromptTemplate, render_prompt

_FORMAT_REMINDERS = {
    KIND_ASSUMPTIONS: (
        "one assumption per line in the exact format <assumption> - <action>,"
        ' split by a single " - " outside backticks, with nothing else'
    ),
    KIND_COLUMN_ASSUMPTIONS: (
        "Column: `<name>` header lines for existing columns only, each"
        " followed by <assumption> - <action> lines, then an Output: section"
    ),
    KIND_PLAN: (
        'numbered lines "<number>. <step text>", with "[optional] " directly'
        " after the number on optional steps, and nothing else"
    ),
    KIND_CODE: "exactly one fenced code block opened and closed with ```",
    KIND_ANSWER: "a plain text answer",
    KIND_COMPLETION: 'exactly the line "TASK COMPLETE"',
}


@dataclass(frozen=True)
class RepairOutcome:
    block: ParsedBlock
    attempts: int
    raw_attempts: tuple[str, ...]
    messages: tuple[Message, ...]  # the initial rendered request

    @property
    def raw(self) -> str:
        return self.raw_attempts[-1]


def corrective_message(kind: str, error: ParseError) -> str:
    return (
        f"Your previous reply did not match the required format"
        f" (line {error.line_no}: {error.reason}). Reply again with"
        f" the same content, formatted as {_FORMAT_REMINDERS[kind]}."
    )


def repair_loop(
    template: PromptTemplate,
    context: dict[str, str],
    config: ProviderConfig,
    known_columns: set[str] | None = None,
) -> RepairOutcome:
    """Render, complete, and parse, reissuing on format violations.

    Makes at most ``config.max_retries + 1`` provider calls; raises
    UnparseableAfterRetries carrying every raw attempt when all fail.
    """
    initial = tuple(render_prompt(template, context))
    messages: list[Message] = list(initial)
    raws: list[str] = []
    last_error: ParseError | None = None
    for _ in range(config.max_retries + 1):
        raw = complete(messages, config)
        raws.append(raw)
        try:
            block = parse_block(raw, template.expected_block, known_columns)
        except ParseError as exc:
            last_error = exc
            messages = messages + [
                ("assistant", raw),
                ("user", corrective_message(template.expected_block, exc)),
            ]
            continue
        return RepairOutcome(block, len(raws), tuple(raws), initial)
    assert last_error is not None
    raise UnparseableAfterRetries(template.expected_block, tuple(raws), last_error)
