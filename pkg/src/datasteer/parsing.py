"""Parser for structured model responses.

One entry point, :func:`parse_block`, turns raw response text into the typed
block the caller expects, or raises a recoverable
:class:`~datasteer.errors.ParseError` naming the line and the violated
rule. It is total over arbitrary input: any text yields a block or a
ParseError, never another exception.

Grammar (the exact inverse of ``blocks.serialize_block``):

- assumption line: ``<tokenized text> " - " <tokenized text>``, split on the
  first `` - `` occurring outside backticks;
- column sections: a ``Column: `name``` header line followed by that
  column's assumption lines, then an ``Output:`` header for the output
  assumptions;
- plan line: ``<int> ". " ["[optional] "] <tokenized text>``; optional steps
  parse as unselected;
- code: the first fenced block (three backticks, optional language tag);
  later fences are ignored with a warning;
- completion: a response whose first non-empty line is ``TASK COMPLETE``.
  When an assumption list is expected, the sentinel is recognised and
  returned as a :class:`CompletionSignal`.
"""

from __future__ import annotations

import logging
import re

from .blocks import (
    COMPLETION_SENTINEL,
    ASSUMPTION_SEPARATOR,
    BLOCK_KINDS,
    FENCE,
    KIND_ANSWER,
    KIND_ASSUMPTIONS,
    KIND_CODE,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_COMPLETION,
    KIND_PLAN,
    AnswerText,
    AssumptionItem,
    AssumptionList,
    CodeBlock,
    ColumnAssumptions,
    CompletionSignal,
    ParsedBlock,
    PlanStep,
    PlanSteps,
)
from .errors import ParseError
from .tokens import split_outside_tokens, tokenize, trim

logger = logging.getLogger(__name__)

COLUMN_HEADER_RE = re.compile(r"^Column:\s*`(.*)`\s*$")
OUTPUT_HEADER = "Output:"
PLAN_LINE_RE = re.compile(r"^(\d+)\. (.*)$")
OPTIONAL_PREFIX = "[optional] "


def _first_nonempty_line(raw: str) -> str | None:
    for line in raw.splitlines():
        if line.strip():
            return line.strip()
    return None


def _parse_assumption_line(line: str, line_no: int, kind: str) -> AssumptionItem:
    tt = tokenize(line)
    split = split_outside_tokens(tt, ASSUMPTION_SEPARATOR)
    if split is None:
        raise ParseError(kind, line_no, f"no {ASSUMPTION_SEPARATOR!r} separator outside backticks")
    left, right = trim(split[0]), trim(split[1])
    if left.is_blank():
        raise ParseError(kind, line_no, "empty assumption before separator")
    if right.is_blank():
        raise ParseError(kind, line_no, "empty action after separator")
    return AssumptionItem(left, right)


def _parse_assumption_list(raw: str) -> AssumptionList | CompletionSignal:
    if _first_nonempty_line(raw) == COMPLETION_SENTINEL:
        return CompletionSignal()
    items: list[AssumptionItem] = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        items.append(_parse_assumption_line(line.strip(), line_no, KIND_ASSUMPTIONS))
    if not items:
        raise ParseError(KIND_ASSUMPTIONS, 1, "no assumption lines found")
    return AssumptionList(tuple(items))


def _parse_column_assumptions(
    raw: str, known_columns: set[str] | None
) -> ColumnAssumptions:
    per_column: dict[str, list[AssumptionItem]] = {}
    output: list[AssumptionItem] = []
    current: list[AssumptionItem] | None = None
    in_output = False
    for line_no, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        header = COLUMN_HEADER_RE.match(stripped)
        if header:
            if in_output:
                raise ParseError(
                    KIND_COLUMN_ASSUMPTIONS, line_no, "column header after Output: section"
                )
            name = header.group(1)
            if not name:
                raise ParseError(KIND_COLUMN_ASSUMPTIONS, line_no, "empty column name")
            if known_columns is not None and name not in known_columns:
                raise ParseError(
                    KIND_COLUMN_ASSUMPTIONS,
                    line_no,
                    f"unknown column `{name}` not present in the dataset",
                    code="unknown_column",
                )
            if name in per_column:
                raise ParseError(
                    KIND_COLUMN_ASSUMPTIONS, line_no, f"duplicate column `{name}`"
                )
            per_column[name] = []
            current = per_column[name]
            continue
        if stripped == OUTPUT_HEADER:
            in_output = True
            current = output
            continue
        if current is None:
            raise ParseError(
                KIND_COLUMN_ASSUMPTIONS, line_no, "assumption line before any Column: header"
            )
        current.append(
            _parse_assumption_line(stripped, line_no, KIND_COLUMN_ASSUMPTIONS)
        )
    if not per_column:
        raise ParseError(KIND_COLUMN_ASSUMPTIONS, 1, "no Column: sections found")
    if not in_output:
        raise ParseError(KIND_COLUMN_ASSUMPTIONS, 1, "missing Output: section")
    return ColumnAssumptions(per_column=per_column, output_assumptions=output)


def _parse_plan(raw: str) -> PlanSteps:
    steps: list[PlanStep] = []
    for line_no, line in enumerate(raw.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        m = PLAN_LINE_RE.match(stripped)
        if not m:
            raise ParseError(KIND_PLAN, line_no, 'line is not "N. text"')
        index = int(m.group(1))
        if index < 1:
            raise ParseError(KIND_PLAN, line_no, "step index must be >= 1")
        rest = m.group(2)
        optional = rest.startswith(OPTIONAL_PREFIX)
        if optional:
            rest = rest[len(OPTIONAL_PREFIX):]
        elif rest.strip() == OPTIONAL_PREFIX.strip():
            # a bare marker with no step text after it
            raise ParseError(KIND_PLAN, line_no, "empty step text")
        text = trim(tokenize(rest))
        if text.is_blank():
            raise ParseError(KIND_PLAN, line_no, "empty step text")
        steps.append(PlanStep(index, text, optional=optional, selected=not optional))
    if not steps:
        raise ParseError(KIND_PLAN, 1, "no plan lines found")
    return PlanSteps(tuple(steps))


def _parse_code(raw: str) -> CodeBlock:
    lines = raw.splitlines()
    open_idx = None
    for i, line in enumerate(lines):
        if line.strip().startswith(FENCE):
            open_idx = i
            break
    if open_idx is None:
        raise ParseError(KIND_CODE, 1, "no fenced code block found")
    language_tag = lines[open_idx].strip()[len(FENCE):].strip()
    close_idx = None
    for i in range(open_idx + 1, len(lines)):
        if lines[i].strip() == FENCE:
            close_idx = i
            break
    if close_idx is None:
        raise ParseError(KIND_CODE, open_idx + 1, "unterminated code fence")
    if any(l.strip().startswith(FENCE) for l in lines[close_idx + 1:]):
        logger.warning("ignoring extra code fences after the first block")
    return CodeBlock("\n".join(lines[open_idx + 1: close_idx]), language_tag)


def extract_code(text: str) -> CodeBlock | None:
    """First fenced block of free-form text, or None when there is none."""
    try:
        return _parse_code(text)
    except ParseError:
        return None


def parse_block(
    raw: str, expected: str, known_columns: set[str] | None = None
) -> ParsedBlock:
    """Parse raw response text as the expected block kind.

    ``known_columns``, when given, restricts column-assumption headers to
    existing dataset columns; a reference to any other column rejects the
    parse so the repair loop can reissue the request.
    """
    if expected not in BLOCK_KINDS:
        raise ValueError(f"unknown expected kind: {expected}")
    if expected == KIND_ASSUMPTIONS:
        return _parse_assumption_list(raw)
    if expected == KIND_COLUMN_ASSUMPTIONS:
        return _parse_column_assumptions(raw, known_columns)
    if expected == KIND_PLAN:
        return _parse_plan(raw)
    if expected == KIND_CODE:
        return _parse_code(raw)
    if expected == KIND_ANSWER:
        return AnswerText(raw.strip())
    if _first_nonempty_line(raw) == COMPLETION_SENTINEL:
        return CompletionSignal()
    raise ParseError(KIND_COMPLETION, 1, f"expected the sentinel {COMPLETION_SENTINEL!r}")
