"""Exception hierarchy shared by every stage of the pipeline."""


class IsaDiffError(Exception):
    """Base class for all errors raised by isadiff."""


class SpecSyntaxError(IsaDiffError):
    """Malformed corpus container or ASL text.

    ``line`` and ``column`` are 1-based and refer to the text being parsed
    when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class ValidationError(IsaDiffError):
    def __init__(self, message, encoding_id=None, field=None):
        self.encoding_id = encoding_id
        self.field = field
        prefix = f"[{encoding_id}] " if encoding_id else ""
        super().__init__(prefix + message)


class UnknownIdentifier(SpecSyntaxError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", line, column)


class EvalError(IsaDiffError):
    pass


class SymbolizeError(IsaDiffError):
    pass


class SolverTimeout(IsaDiffError):
    def __init__(self, budget, message=""):
        self.budget = budget
        super().__init__(message or f"no witness found within {budget} trials")


class MappingError(IsaDiffError):
    pass


class UnknownEncoding(IsaDiffError):
    pass


class StateSchemaError(IsaDiffError):
    pass


class BackendError(IsaDiffError):
    pass


class JournalCorrupt(IsaDiffError):
    pass
