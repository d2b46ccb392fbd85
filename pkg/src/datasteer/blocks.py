"""Typed content blocks of session components, and their serializations.

A component's content is either a :class:`TaskSpec` (the user's input query)
or one of six parsed response kinds: assumption/action lists, per-column
assumptions, plan steps, a code block, free answer text, or the completion
signal.

Each kind has two faithful encodings:

- the response grammar (``serialize_block``), the exact inverse of
  :mod:`datasteer.parsing` — assumption lines are
  ``<assumption> - <action>``, plan lines ``N. [optional] text``, code a
  single fenced block, completion the sentinel line;
- a tagged JSON dict (``block_to_json`` / ``block_from_json``) used by
  snapshots and the event log, which additionally preserves UI state the
  grammar cannot carry (plan-step selection).

``context_text`` is the third, lossy rendering: what a component contributes
to downstream prompts. It differs from the grammar only for plans, where
deselected optional steps are omitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tokens import TokenizedText, tokenize

COMPLETION_SENTINEL = "TASK COMPLETE"
ASSUMPTION_SEPARATOR = " - "
OPTIONAL_MARKER = "[optional] "
FENCE = "```"

KIND_ASSUMPTIONS = "assumption_list"
KIND_COLUMN_ASSUMPTIONS = "column_assumptions"
KIND_PLAN = "plan_steps"
KIND_CODE = "code"
KIND_ANSWER = "answer"
KIND_COMPLETION = "completion"
KIND_TASK = "task"

BLOCK_KINDS = (
    KIND_ASSUMPTIONS,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_PLAN,
    KIND_CODE,
    KIND_ANSWER,
    KIND_COMPLETION,
)


@dataclass(frozen=True)
class AssumptionItem:
    assumption: TokenizedText
    action: TokenizedText

    def serialize(self) -> str:
        return (
            self.assumption.serialize()
            + ASSUMPTION_SEPARATOR
            + self.action.serialize()
        )


@dataclass(frozen=True)
class PlanStep:
    index: int
    text: TokenizedText
    optional: bool = False
    selected: bool = True

    def serialize(self) -> str:
        marker = OPTIONAL_MARKER if self.optional else ""
        return f"{self.index}. {marker}{self.text.serialize()}"


@dataclass(frozen=True)
class AssumptionList:
    items: tuple[AssumptionItem, ...]
    kind = KIND_ASSUMPTIONS


@dataclass(eq=False)
class ColumnAssumptions:
    """Per-column assumption items plus assumptions about the task output.

    Column order is meaningful; equality compares it.
    """

    per_column: dict[str, list[AssumptionItem]]
    output_assumptions: list[AssumptionItem] = field(default_factory=list)
    kind = KIND_COLUMN_ASSUMPTIONS

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColumnAssumptions):
            return NotImplemented
        return (
            list(self.per_column.items()) == list(other.per_column.items())
            and self.output_assumptions == other.output_assumptions
        )

    def column_names(self) -> list[str]:
        return list(self.per_column)


@dataclass(frozen=True)
class PlanSteps:
    steps: tuple[PlanStep, ...]
    kind = KIND_PLAN


@dataclass(frozen=True)
class CodeBlock:
    code: str
    language_tag: str = ""
    kind = KIND_CODE


@dataclass(frozen=True)
class AnswerText:
    text: str
    kind = KIND_ANSWER


@dataclass(frozen=True)
class CompletionSignal:
    kind = KIND_COMPLETION


@dataclass(frozen=True)
class TaskSpec:
    """The user's natural-language task plus the datasets it runs against."""

    query: str
    dataset_ids: tuple[str, ...]
    strategy: str  # conversational | stepwise | phasewise
    kind = KIND_TASK


ParsedBlock = (
    AssumptionList
    | ColumnAssumptions
    | PlanSteps
    | CodeBlock
    | AnswerText
    | CompletionSignal
)
NodeContent = ParsedBlock | TaskSpec

STRATEGIES = ("conversational", "stepwise", "phasewise")


# --- grammar serialization -------------------------------------------------

def serialize_block(block: ParsedBlock) -> str:
    """Render a block in the exact response grammar the parser accepts."""
    if isinstance(block, AssumptionList):
        return "\n".join(item.serialize() for item in block.items)
    if isinstance(block, ColumnAssumptions):
        lines: list[str] = []
        for name, items in block.per_column.items():
            lines.append(f"Column: `{name}`")
            lines.extend(item.serialize() for item in items)
        lines.append("Output:")
        lines.extend(item.serialize() for item in block.output_assumptions)
        return "\n".join(lines)
    if isinstance(block, PlanSteps):
        return "\n".join(step.serialize() for step in block.steps)
    if isinstance(block, CodeBlock):
        return f"{FENCE}{block.language_tag}\n{block.code}\n{FENCE}"
    if isinstance(block, AnswerText):
        return block.text
    if isinstance(block, CompletionSignal):
        return COMPLETION_SENTINEL
    raise TypeError(f"not a parsed block: {block!r}")


def context_text(content: NodeContent) -> str:
    """What this content contributes to downstream prompt contexts.

    Identical to the grammar serialization except that plans emit only their
    selected steps, and a task spec emits its query text.
    """
    if isinstance(content, TaskSpec):
        return content.query
    if isinstance(content, PlanSteps):
        return "\n".join(s.serialize() for s in content.steps if s.selected)
    return serialize_block(content)


# --- JSON encoding ---------------------------------------------------------

def _item_to_json(item: AssumptionItem) -> dict:
    return {
        "assumption": item.assumption.serialize(),
        "action": item.action.serialize(),
    }


def _item_from_json(d: dict) -> AssumptionItem:
    return AssumptionItem(tokenize(d["assumption"]), tokenize(d["action"]))


def block_to_json(content: NodeContent) -> dict:
    if isinstance(content, AssumptionList):
        return {"kind": KIND_ASSUMPTIONS, "items": [_item_to_json(i) for i in content.items]}
    if isinstance(content, ColumnAssumptions):
        return {
            "kind": KIND_COLUMN_ASSUMPTIONS,
            "columns": [
                [name, [_item_to_json(i) for i in items]]
                for name, items in content.per_column.items()
            ],
            "output": [_item_to_json(i) for i in content.output_assumptions],
        }
    if isinstance(content, PlanSteps):
        return {
            "kind": KIND_PLAN,
            "steps": [
                {
                    "index": s.index,
                    "text": s.text.serialize(),
                    "optional": s.optional,
                    "selected": s.selected,
                }
                for s in content.steps
            ],
        }
    if isinstance(content, CodeBlock):
        return {"kind": KIND_CODE, "code": content.code, "language_tag": content.language_tag}
    if isinstance(content, AnswerText):
        return {"kind": KIND_ANSWER, "text": content.text}
    if isinstance(content, CompletionSignal):
        return {"kind": KIND_COMPLETION}
    if isinstance(content, TaskSpec):
        return {
            "kind": KIND_TASK,
            "query": content.query,
            "dataset_ids": list(content.dataset_ids),
            "strategy": content.strategy,
        }
    raise TypeError(f"not serializable content: {content!r}")


def block_from_json(d: dict) -> NodeContent:
    kind = d["kind"]
    if kind == KIND_ASSUMPTIONS:
        return AssumptionList(tuple(_item_from_json(i) for i in d["items"]))
    if kind == KIND_COLUMN_ASSUMPTIONS:
        return ColumnAssumptions(
            per_column={name: [_item_from_json(i) for i in items] for name, items in d["columns"]},
            output_assumptions=[_item_from_json(i) for i in d["output"]],
        )
    if kind == KIND_PLAN:
        return PlanSteps(
            tuple(
                PlanStep(s["index"], tokenize(s["text"]), s["optional"], s["selected"])
                for s in d["steps"]
            )
        )
    if kind == KIND_CODE:
        return CodeBlock(d["code"], d.get("language_tag", ""))
    if kind == KIND_ANSWER:
        return AnswerText(d["text"])
    if kind == KIND_COMPLETION:
        return CompletionSignal()
    if kind == KIND_TASK:
        return TaskSpec(d["query"], tuple(d["dataset_ids"]), d["strategy"])
    raise ValueError(f"unknown content kind: {kind}")
