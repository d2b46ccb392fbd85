"""Prompt templates and rendering.

Templates constrain only the output format (line grammar, backtick tokens,
section headers, the completion sentinel); they carry no worked examples
and no task-specific hints. The wording here is original to this project.

Rendering substitutes ``{name}`` placeholders verbatim. Every placeholder
must be covered by the render context; brace text that does not look like
a placeholder (``{``, ``{1x}``, ``{a b}``) passes through untouched so code
snippets inside prompts survive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .blocks import (
    KIND_ANSWER,
    KIND_ASSUMPTIONS,
    KIND_CODE,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_PLAN,
    BLOCK_KINDS,
)
from .errors import MissingPlaceholder

PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    message_roles: tuple[tuple[str, str], ...]
    expected_block: str

    def __post_init__(self):
        if self.expected_block not in BLOCK_KINDS:
            raise ValueError(f"unknown expected block kind: {self.expected_block}")
        for role, _ in self.message_roles:
            if role not in ("system", "user"):
                raise ValueError(f"unknown role: {role}")

    def placeholders(self) -> set[str]:
        names: set[str] = set()
        for _, body in self.message_roles:
            names.update(PLACEHOLDER_RE.findall(body))
        return names


def render_prompt(
    template: PromptTemplate, context: dict[str, str]
) -> list[tuple[str, str]]:
    """Substitute placeholders, failing loudly on any uncovered name."""

    def sub(m: re.Match) -> str:
        name = m.group(1)
        if name not in context:
            raise MissingPlaceholder(name)
        return context[name]

    return [
        (role, PLACEHOLDER_RE.sub(sub, body)) for role, body in template.message_roles
    ]


# Shared format fragments. The grammar here must stay bit-identical to what
# the parser accepts; tests parse template-conformant responses round-trip.
_ASSUMPTION_FORMAT = (
    "Write one line per assumption, in the exact format:\n"
    "<assumption> - <action>\n"
    "separating the assumption from the action you will take with a single"
    ' " - " (space, hyphen, space). Enclose every column name, variable'
    " name, and keyword in backticks, like `Rating`. Output nothing else:"
    " no headings, no numbering, no prose around the lines."
)

_TASK_BLOCK = "Task: {query}\n\nSelected datasets:\n{datasets}"


def _template(
    id: str, system: str, user: str, expected: str
) -> PromptTemplate:
    return PromptTemplate(id, (("system", system), ("user", user)), expected)


PHASE_A_COLUMNS = _template(
    "phase-a-columns",
    "You select the dataset columns relevant to the task and state your"
    " assumptions about them.\n"
    "For each relevant column, write a header line:\n"
    "Column: `<column name>`\n"
    "followed by that column's assumption lines. After all columns, write"
    " a line:\n"
    "Output:\n"
    "followed by assumption lines about the final output (result shape,"
    " ordering, displayed columns).\n" + _ASSUMPTION_FORMAT + "\n"
    "Only reference columns that exist in the dataset summaries.",
    _TASK_BLOCK + "\n\nList the relevant columns with your assumptions.",
    KIND_COLUMN_ASSUMPTIONS,
)

PHASE_B_PLAN = _template(
    "phase-b-plan",
    "You write a numbered plan for the analysis.\n"
    "Write one step per line in the exact format:\n"
    "<number>. <step text>\n"
    "Number the steps 1, 2, 3, ... in execution order. Prefix a step that"
    ' is a suggestion rather than strictly required with "[optional] "'
    " immediately after the number, like:\n"
    "3. [optional] drop rows with missing `Rating`\n"
    "Enclose every column name, variable name, and keyword in backticks."
    " Output nothing but the numbered lines.",
    _TASK_BLOCK + "\n\nAgreed assumptions:\n{context}\n\nWrite the plan.",
    KIND_PLAN,
)

PHASE_C_CODE = _template(
    "phase-c-code",
    "You write the final analysis code.\n"
    "Respond with exactly one fenced code block (three backticks, optional"
    " language tag) and nothing outside it. The code must follow the agreed"
    " assumptions and plan, print the final result, and assign intermediate"
    " results to plainly named variables.",
    _TASK_BLOCK + "\n\nAgreed assumptions and plan:\n{context}\n\n"
    "The datasets are already loaded into the variables named in the loading"
    " step. Write the code.",
    KIND_CODE,
)

SUBGOAL_ASSUMPTIONS = _template(
    "subgoal-assumptions",
    "You state the next subgoal of the analysis as assumption/action"
    " lines.\n"
    "Focus on one specific objective: the single next thing to do, not the"
    " whole analysis.\n" + _ASSUMPTION_FORMAT + "\n"
    "If the task is already fully accomplished by the progress shown, reply"
    " with exactly:\n"
    "TASK COMPLETE\n"
    "on the first line and nothing else.",
    _TASK_BLOCK + "\n\nProgress so far:\n{context}\n\n"
    "State the next subgoal, or declare completion.",
    KIND_ASSUMPTIONS,
)

SUBGOAL_CODE = _template(
    "subgoal-code",
    "You write code for the current subgoal only.\n"
    "Respond with exactly one fenced code block (three backticks, optional"
    " language tag) and nothing outside it. Implement just the current"
    " subgoal, continuing from the variables that earlier steps defined,"
    " and print or assign the subgoal's result.",
    _TASK_BLOCK + "\n\nProgress so far:\n{context}\n\n"
    "Current subgoal:\n{subgoal}\n\nWrite the code for this subgoal.",
    KIND_CODE,
)

CONVERSATION_TURN = _template(
    "conversation-turn",
    "You are a data analysis assistant replying in chat.\n"
    "Answer the user's request directly. When code is needed, include"
    " exactly one fenced code block (three backticks) inside your reply;"
    " the datasets are already loaded into the variables named in the"
    " dataset summaries. Keep the rest of the reply short prose.",
    _TASK_BLOCK + "\n\nConversation so far:\n{context}\n\nReply to the user.",
    KIND_ANSWER,
)

SIDE_QUESTION = _template(
    "side-question",
    "You answer a clarifying question about one part of the analysis.\n"
    "Answer in short prose. Do not propose code changes; explain only.",
    _TASK_BLOCK + "\n\nAnalysis context:\n{context}\n\n"
    "Question about this part:\n{question}\n\nAnswer the question.",
    KIND_ANSWER,
)

SIDE_QUERY = _template(
    "side-query",
    "You write read-only code to inspect data mid-analysis.\n"
    "Respond with exactly one fenced code block (three backticks) and"
    " nothing outside it. The code must only inspect: print, summarize, or"
    " display values. It must not modify, create, or delete any existing"
    " variable.",
    _TASK_BLOCK + "\n\nAnalysis context:\n{context}\n\n"
    "Inspection request:\n{question}\n\nWrite the read-only code.",
    KIND_CODE,
)

TEMPLATES: dict[str, PromptTemplate] = {
    t.id: t
    for t in (
        PHASE_A_COLUMNS,
        PHASE_B_PLAN,
        PHASE_C_CODE,
        SUBGOAL_ASSUMPTIONS,
        SUBGOAL_CODE,
        CONVERSATION_TURN,
        SIDE_QUESTION,
        SIDE_QUERY,
    )
}
