"""Exception hierarchy shared across the package.

Every domain error raised by the library derives from :class:`DatasteerError`
so the HTTP layer can map them to status codes in one place.
"""

from __future__ import annotations


class DatasteerError(Exception):
    """Base class for all domain errors."""


# --- dataset profiling -----------------------------------------------------

class EmptyFile(DatasteerError):
    """The uploaded CSV has no header row."""


class DuplicateColumn(DatasteerError):
    """Two header cells carry the same name."""


class UnknownDataset(DatasteerError):
    """A dataset id was requested that is not in the store."""


# --- prompt rendering / provider -------------------------------------------

class MissingPlaceholder(DatasteerError):
    """A template placeholder has no value in the render context."""

    def __init__(self, name: str):
        super().__init__(f"missing placeholder: {name}")
        self.name = name


class ProviderUnavailable(DatasteerError):
    """The live provider could not be reached or returned an error."""

    def __init__(self, message: str, request_hash: str):
        super().__init__(f"{message} (request {request_hash})")
        self.request_hash = request_hash


class FixtureMissing(DatasteerError):
    """Scripted mode has no fixture for this request hash."""

    def __init__(self, request_hash: str, fixture_dir: str):
        super().__init__(
            f"no fixture for request {request_hash} under {fixture_dir}"
        )
        self.request_hash = request_hash


# --- response parsing ------------------------------------------------------

class ParseError(DatasteerError):
    """A model response violated the block grammar. Recoverable via repair."""

    def __init__(self, kind: str, line_no: int, reason: str, code: str | None = None):
        super().__init__(f"{kind} parse failed at line {line_no}: {reason}")
        self.kind = kind
        self.line_no = line_no
        self.reason = reason
        # Machine-readable failure class ("unknown_column", ...) for callers
        # that branch on the cause without matching reason strings.
        self.code = code


class UnparseableAfterRetries(DatasteerError):
    """All repair attempts produced malformed output.

    Carries every raw attempt so the failure can be surfaced verbatim.
    """

    def __init__(self, kind: str, attempts: list[str], last_error: ParseError):
        super().__init__(
            f"{kind} unparseable after {len(attempts)} attempts: {last_error}"
        )
        self.kind = kind
        self.attempts = attempts
        self.last_error = last_error


class RejectedColumns(DatasteerError):
    """Column assumptions kept referencing columns absent from the dataset."""

    def __init__(self, attempts: list[str], last_error: ParseError):
        super().__init__(f"column selection kept failing: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


# --- session graph ---------------------------------------------------------

class StaleBranch(DatasteerError):
    """Append targeted a branch whose leaf has moved."""


class NotEditable(DatasteerError):
    """The node's kind (or position) does not admit edits."""


class NothingPending(DatasteerError):
    """Undo/submit called on a node without a pending edit."""


class UnknownBranch(DatasteerError):
    """No branch with that id."""


class UnknownNode(DatasteerError):
    """No node with that id."""


# --- decomposition engine --------------------------------------------------

class PendingEditsExist(DatasteerError):
    """Cannot advance while the active path carries pending edits."""

    def __init__(self, node_ids: list[int]):
        super().__init__(f"pending edits on nodes {node_ids}")
        self.node_ids = node_ids


class MaxSubgoalsExceeded(DatasteerError):
    """The stepwise loop hit its subgoal cap without a completion signal."""


class WrongStrategy(DatasteerError):
    """Operation not defined for this session's strategy."""


class UnknownColumn(DatasteerError):
    """Phase-A mutation referenced a column absent from the dataset."""


class NotOptional(DatasteerError):
    """Toggle targeted a required plan step."""


class InvalidStrategy(DatasteerError):
    """Session creation named an unknown strategy."""


# --- execution -------------------------------------------------------------

class KernelStartFailure(DatasteerError):
    """Kernel backend failed to reach the idle state."""


class KernelBusy(DatasteerError):
    """The kernel is mid-execution and cannot take this message."""


class KernelDead(DatasteerError):
    """The kernel process is gone."""


class ExecutionTimeout(DatasteerError):
    """Execution exceeded the configured timeout and was interrupted."""


class UnknownVariable(DatasteerError):
    """No binding with that name in the kernel namespace."""


class NotTabular(DatasteerError):
    """Variable paging requested on a non-dataframe binding."""


# --- side conversations ----------------------------------------------------

class InvalidSelection(DatasteerError):
    """Selection span falls outside the anchor node's code."""


class SelectionRequired(DatasteerError):
    """Generate-code threads need a selected code span."""


class ThreadNotAnswered(DatasteerError):
    """Insert requested before the thread has a generated snippet."""


class AnchorNodeGone(DatasteerError):
    """The thread's anchor node is no longer on the active branch."""


# --- persistence -----------------------------------------------------------

class SchemaViolation(DatasteerError):
    """An imported snapshot does not match the session schema."""
