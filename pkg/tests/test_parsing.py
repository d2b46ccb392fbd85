"""Response parser: grammar, sentinel handling, totality over junk input."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datasteer.blocks import (
    KIND_ANSWER,
    KIND_ASSUMPTIONS,
    KIND_CODE,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_COMPLETION,
    KIND_PLAN,
    AnswerText,
    AssumptionList,
    CodeBlock,
    ColumnAssumptions,
    CompletionSignal,
    PlanSteps,
    serialize_block,
)
from datasteer.errors import ParseError
from datasteer.parsing import extract_code, parse_block

ALL_KINDS = (
    KIND_ASSUMPTIONS,
    KIND_COLUMN_ASSUMPTIONS,
    KIND_PLAN,
    KIND_CODE,
    KIND_ANSWER,
    KIND_COMPLETION,
)


class TestAssumptionList:
    def test_basic(self):
        raw = (
            "`Rating` has text suffixes - strip them and coerce to numeric\n"
            "missing values exist - drop rows with nulls\n"
        )
        block = parse_block(raw, KIND_ASSUMPTIONS)
        assert isinstance(block, AssumptionList)
        assert len(block.items) == 2
        assert block.items[0].assumption.serialize() == "`Rating` has text suffixes"
        assert block.items[0].action.serialize() == "strip them and coerce to numeric"

    def test_blank_lines_skipped(self):
        raw = "\n\na - b\n\n c - d \n"
        block = parse_block(raw, KIND_ASSUMPTIONS)
        assert [i.serialize() for i in block.items] == ["a - b", "c - d"]

    def test_separator_inside_backticks_does_not_count(self):
        with pytest.raises(ParseError) as exc:
            parse_block("`a - b` has no separator outside", KIND_ASSUMPTIONS)
        assert exc.value.line_no == 1

    def test_missing_separator(self):
        with pytest.raises(ParseError) as exc:
            parse_block("just one assumption line\nok - fine", KIND_ASSUMPTIONS)
        assert exc.value.kind == KIND_ASSUMPTIONS
        assert exc.value.line_no == 1

    def test_empty_sides_rejected(self):
        with pytest.raises(ParseError):
            parse_block(" - only action", KIND_ASSUMPTIONS)
        with pytest.raises(ParseError):
            parse_block("only assumption - ", KIND_ASSUMPTIONS)

    def test_empty_response_rejected(self):
        with pytest.raises(ParseError):
            parse_block("", KIND_ASSUMPTIONS)
        with pytest.raises(ParseError):
            parse_block("\n  \n", KIND_ASSUMPTIONS)

    def test_sentinel_yields_completion(self):
        block = parse_block("TASK COMPLETE", KIND_ASSUMPTIONS)
        assert isinstance(block, CompletionSignal)

    def test_sentinel_with_leading_blank_lines(self):
        block = parse_block("\n\n  TASK COMPLETE  \n", KIND_ASSUMPTIONS)
        assert isinstance(block, CompletionSignal)

    def test_sentinel_not_on_first_line_is_not_completion(self):
        with pytest.raises(ParseError):
            parse_block("a - b\nTASK COMPLETE", KIND_ASSUMPTIONS)
        # second line is not an assumption line, so the parse fails there

    def test_round_trip(self):
        raw = "`X` is sparse - fill with `0`\nvotes are strings - cast `votes` to int"
        block = parse_block(raw, KIND_ASSUMPTIONS)
        again = parse_block(serialize_block(block), KIND_ASSUMPTIONS)
        assert again == block


class TestColumnAssumptions:
    RAW = (
        "Column: `Rating`\n"
        "values have a stars suffix - strip the suffix\n"
        "some cells are empty - drop missing rows\n"
        "Column: `Brand`\n"
        "brand casing varies - compare case-insensitively\n"
        "Output:\n"
        "top five requested - return exactly 5 rows\n"
    )

    def test_basic(self):
        block = parse_block(self.RAW, KIND_COLUMN_ASSUMPTIONS)
        assert isinstance(block, ColumnAssumptions)
        assert block.column_names() == ["Rating", "Brand"]
        assert len(block.per_column["Rating"]) == 2
        assert len(block.output_assumptions) == 1

    def test_known_columns_accepts_listed(self):
        block = parse_block(
            self.RAW, KIND_COLUMN_ASSUMPTIONS, known_columns={"Rating", "Brand", "Price"}
        )
        assert block.column_names() == ["Rating", "Brand"]

    def test_unknown_column_rejected(self):
        with pytest.raises(ParseError) as exc:
            parse_block(self.RAW, KIND_COLUMN_ASSUMPTIONS, known_columns={"Rating"})
        assert "Brand" in exc.value.reason

    def test_duplicate_column_rejected(self):
        raw = "Column: `A`\nx - y\nColumn: `A`\nz - w\nOutput:\n"
        with pytest.raises(ParseError) as exc:
            parse_block(raw, KIND_COLUMN_ASSUMPTIONS)
        assert "duplicate" in exc.value.reason

    def test_line_before_header_rejected(self):
        with pytest.raises(ParseError):
            parse_block("stray - line\nColumn: `A`\nOutput:\n", KIND_COLUMN_ASSUMPTIONS)

    def test_missing_output_section_rejected(self):
        with pytest.raises(ParseError) as exc:
            parse_block("Column: `A`\nx - y\n", KIND_COLUMN_ASSUMPTIONS)
        assert "Output" in exc.value.reason

    def test_column_after_output_rejected(self):
        raw = "Column: `A`\nx - y\nOutput:\nColumn: `B`\n"
        with pytest.raises(ParseError):
            parse_block(raw, KIND_COLUMN_ASSUMPTIONS)

    def test_empty_output_section_allowed(self):
        block = parse_block("Column: `A`\nx - y\nOutput:\n", KIND_COLUMN_ASSUMPTIONS)
        assert block.output_assumptions == []

    def test_round_trip(self):
        block = parse_block(self.RAW, KIND_COLUMN_ASSUMPTIONS)
        again = parse_block(serialize_block(block), KIND_COLUMN_ASSUMPTIONS)
        assert again == block


class TestPlanSteps:
    def test_basic(self):
        raw = (
            "1. load the dataset\n"
            "2. [optional] drop rows with missing `Rating`\n"
            "3. sort by `Rating` descending\n"
        )
        block = parse_block(raw, KIND_PLAN)
        assert isinstance(block, PlanSteps)
        assert [s.index for s in block.steps] == [1, 2, 3]
        assert [s.optional for s in block.steps] == [False, True, False]
        # optional steps start deselected, required ones selected
        assert [s.selected for s in block.steps] == [True, False, True]

    def test_missing_space_after_dot_rejected(self):
        with pytest.raises(ParseError):
            parse_block("1.load data", KIND_PLAN)

    def test_unnumbered_line_rejected(self):
        with pytest.raises(ParseError) as exc:
            parse_block("1. ok\n- bullet instead\n", KIND_PLAN)
        assert exc.value.line_no == 2

    def test_zero_index_rejected(self):
        with pytest.raises(ParseError):
            parse_block("0. start from zero", KIND_PLAN)

    def test_empty_step_text_rejected(self):
        with pytest.raises(ParseError):
            parse_block("1.  ", KIND_PLAN)
        with pytest.raises(ParseError):
            parse_block("1. [optional] ", KIND_PLAN)

    def test_empty_response_rejected(self):
        with pytest.raises(ParseError):
            parse_block("\n", KIND_PLAN)

    def test_round_trip_keeps_optional_marker(self):
        raw = "1. a\n2. [optional] b"
        block = parse_block(raw, KIND_PLAN)
        assert serialize_block(block) == raw
        assert parse_block(serialize_block(block), KIND_PLAN) == block


class TestCodeBlock:
    def test_basic(self):
        raw = "Here is the code:\n```python\nx = 1\nprint(x)\n```\nDone."
        block = parse_block(raw, KIND_CODE)
        assert isinstance(block, CodeBlock)
        assert block.language_tag == "python"
        assert block.code == "x = 1\nprint(x)"

    def test_no_language_tag(self):
        block = parse_block("```\ny = 2\n```", KIND_CODE)
        assert block.language_tag == ""
        assert block.code == "y = 2"

    def test_missing_fence_rejected(self):
        with pytest.raises(ParseError) as exc:
            parse_block("x = 1", KIND_CODE)
        assert "fence" in exc.value.reason or "fenced" in exc.value.reason

    def test_unterminated_fence_rejected(self):
        with pytest.raises(ParseError) as exc:
            parse_block("```python\nx = 1\n", KIND_CODE)
        assert "unterminated" in exc.value.reason

    def test_first_block_wins_extra_fences_ignored(self, caplog):
        raw = "```python\na = 1\n```\ntext\n```python\nb = 2\n```"
        import logging

        with caplog.at_level(logging.WARNING, logger="datasteer.parsing"):
            block = parse_block(raw, KIND_CODE)
        assert block.code == "a = 1"
        assert any("extra code fences" in r.message for r in caplog.records)

    def test_empty_body(self):
        block = parse_block("```python\n```", KIND_CODE)
        assert block.code == ""

    def test_round_trip(self):
        block = CodeBlock("import math\nprint(math.pi)", "python")
        assert parse_block(serialize_block(block), KIND_CODE) == block

    def test_extract_code_helper(self):
        assert extract_code("no code here") is None
        found = extract_code("look:\n```python\nz = 3\n```")
        assert found is not None and found.code == "z = 3"


class TestAnswerAndCompletion:
    def test_answer_is_stripped_raw(self):
        block = parse_block("  The top product is X.  \n", KIND_ANSWER)
        assert block == AnswerText("The top product is X.")

    def test_answer_accepts_empty(self):
        assert parse_block("", KIND_ANSWER) == AnswerText("")

    def test_completion_sentinel(self):
        assert isinstance(parse_block("TASK COMPLETE", KIND_COMPLETION), CompletionSignal)
        assert isinstance(parse_block("\nTASK COMPLETE\nnotes", KIND_COMPLETION), CompletionSignal)

    def test_completion_wrong_text_rejected(self):
        with pytest.raises(ParseError):
            parse_block("task complete", KIND_COMPLETION)
        with pytest.raises(ParseError):
            parse_block("TASK COMPLETED", KIND_COMPLETION)

    def test_unknown_kind_is_a_programming_error(self):
        with pytest.raises(ValueError):
            parse_block("x", "mystery_kind")


class TestTotality:
    """parse_block returns a block or ParseError for any input whatsoever."""

    @settings(max_examples=300)
    @given(st.text(), st.sampled_from(ALL_KINDS))
    def test_never_raises_anything_else(self, raw, kind):
        try:
            parse_block(raw, kind)
        except ParseError:
            pass

    # one visible line: no backticks, no " - ", and nothing splitlines
    # treats as a line break
    _side = (
        st.text(alphabet=st.characters(blacklist_characters="`-"), min_size=1)
        .filter(lambda s: s.strip() and len(s.splitlines()) == 1)
        .map(str.strip)
    )

    @settings(max_examples=200)
    @given(st.lists(st.tuples(_side, _side), min_size=1, max_size=6))
    def test_well_formed_assumption_lines_always_parse(self, pairs):
        raw = "\n".join(f"{a} - {b}" for a, b in pairs)
        if raw.splitlines()[0].strip() == "TASK COMPLETE":
            return
        block = parse_block(raw, KIND_ASSUMPTIONS)
        assert len(block.items) == len(pairs)

    @settings(max_examples=200)
    @given(st.text())
    def test_parse_serialize_parse_is_stable(self, raw):
        for kind in ALL_KINDS:
            try:
                block = parse_block(raw, kind)
            except ParseError:
                continue
            if isinstance(block, CompletionSignal):
                continue
            again = parse_block(serialize_block(block), kind)
            assert again == block
