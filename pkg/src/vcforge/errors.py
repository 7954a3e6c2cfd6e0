"""Exception hierarchy shared by all pipeline stages.

The CLI maps the top-level families onto stable exit codes, so every
error raised by the library derives from one of the classes below.
"""

from __future__ import annotations


class VcforgeError(Exception):
    """Base class of every error raised by this package."""


# -- terms -------------------------------------------------------------------


class TermError(VcforgeError):
    pass


class MalformedTerm(TermError):
    pass


class MalformedPattern(TermError):
    pass


class SexpError(TermError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"at offset {offset}: {message}")
        self.offset = offset


# -- ingest ------------------------------------------------------------------


class IngestError(VcforgeError):
    pass


class ParseError(IngestError):
    def __init__(self, location, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.message = message


class SchemaError(IngestError):
    pass


class ValidationError(IngestError):
    pass


class CycleError(IngestError):
    def __init__(self, cycle: list[str]):
        super().__init__("import cycle: " + " -> ".join(cycle + cycle[:1]))
        self.cycle = cycle


# -- rewriting ---------------------------------------------------------------


class RewriteError(VcforgeError):
    pass


class RuleFormatError(RewriteError):
    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class IllegalContractum(RuleFormatError):
    pass


class RewriteBudgetExceeded(RewriteError):
    def __init__(self, path: tuple[int, ...], budget: int):
        super().__init__(
            f"rewrite budget of {budget} steps exhausted at term path {list(path)}"
        )
        self.path = path
        self.budget = budget


# -- emission ----------------------------------------------------------------


class EmitError(VcforgeError):
    pass


class ProfileError(EmitError):
    pass


class UnmappedConstant(EmitError):
    def __init__(self, name: str):
        super().__init__(f"constant {name!r} has no mapping in the target profile")
        self.name = name


class NonUniformUnsupported(EmitError):
    def __init__(self, name: str, target: str):
        super().__init__(
            f"{name!r} depends on a non-uniform datatype, unsupported by {target}"
        )
        self.name = name
        self.target = target


class ReparseError(EmitError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"at offset {offset}: {message}")
        self.offset = offset


# -- complication ------------------------------------------------------------


class ComplicateError(VcforgeError):
    pass


class LexError(ComplicateError):
    def __init__(self, offset: int, message: str = "unbalanced delimiter"):
        super().__init__(f"at byte {offset}: {message}")
        self.offset = offset


class SpanMismatch(ComplicateError):
    pass


# -- metrics -----------------------------------------------------------------


class MetricsError(VcforgeError):
    pass


class EmptyInput(MetricsError):
    pass


# -- evaluation harness ------------------------------------------------------


class HarnessError(VcforgeError):
    pass


class AdapterConfigError(HarnessError):
    pass


class AdapterSpawnError(HarnessError):
    pass


class PlaceholderMissing(HarnessError):
    pass


class InsufficientAttempts(HarnessError):
    def __init__(self, goal_id: str, have: int, need: int):
        super().__init__(f"goal {goal_id!r} has {have} attempts, pass@{need} needs {need}")
        self.goal_id = goal_id


class UnmappedGoal(HarnessError):
    def __init__(self, goal_id: str):
        super().__init__(f"goal {goal_id!r} has no category")
        self.goal_id = goal_id
