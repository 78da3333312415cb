"""Exception hierarchy.

Each exception carries the CLI exit code it maps to, so the command layer
never has to pattern-match on messages.
"""


class RecallDynError(Exception):
    exit_code = 1


class InputError(RecallDynError):
    """Malformed user input (pattern files, weight files, configs)."""

    exit_code = 1

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        parts = [str(path)] if path is not None else []
        if line is not None:
            parts.append(f"line {line}")
        where = ", ".join(parts)
        super().__init__(f"{where}: {message}" if where else message)


class InvalidStateError(RecallDynError, ValueError):
    exit_code = 1


class DimensionError(RecallDynError, ValueError):
    exit_code = 1


class StructureError(RecallDynError):
    """Weight matrix violates the block structure, symmetry or equal row sums."""

    exit_code = 2


class UnsupportedRuleError(StructureError):
    exit_code = 2


class DegenerateSpectrumError(StructureError):
    exit_code = 2


class AnalysisError(RecallDynError):
    exit_code = 3


class NotAtHopfError(AnalysisError):
    pass


class DegeneracyError(AnalysisError):
    pass


class ResonanceError(AnalysisError):
    pass


class DivergenceError(RecallDynError):
    exit_code = 4

    def __init__(self, message, last_valid_time=None):
        self.last_valid_time = last_valid_time
        if last_valid_time is not None:
            message = f"{message} (last valid time {last_valid_time:.6g})"
        super().__init__(message)


class RenormalizationError(DivergenceError):
    pass
