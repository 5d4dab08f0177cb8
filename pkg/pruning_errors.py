"""
Exception hierarchy for the token pruning tool.

Everything derives from ValueError so callers that only catch ValueError
(as the older tooling did) keep working.
"""


class TokenPruningError(ValueError):
    """Base class for every data or numerical error raised by this project"""


class ConfigError(TokenPruningError):
    """A configuration value is outside its allowed range"""


# ----------------------------------------------------------------
#   Token / query matrices
# ----------------------------------------------------------------
class ShapeMismatchError(TokenPruningError):
    pass


class NonFiniteEntryError(TokenPruningError):
    pass


class NormExceedsUnitError(TokenPruningError):
    pass


class DimensionMismatchError(TokenPruningError):
    pass


class EmptyDocumentError(TokenPruningError):
    pass


class ZeroVectorError(TokenPruningError):
    pass


class TooFewTokensError(TokenPruningError):
    pass


class TooFewDocumentsError(TokenPruningError):
    pass


# ----------------------------------------------------------------
#   Numerical kernels
# ----------------------------------------------------------------
class NumericalBreakdownError(TokenPruningError):
    pass


class IterationLimitError(TokenPruningError):
    pass


class ConvergenceFailureError(TokenPruningError):
    pass


class DimensionNot2Error(TokenPruningError):
    pass


class GradientAbsentError(TokenPruningError):
    pass


# ----------------------------------------------------------------
#   Corpus files and indexes
# ----------------------------------------------------------------
class IndexMismatchError(TokenPruningError):
    pass


class ParseError(TokenPruningError):
    def __init__(self, line_number, reason):
        super().__init__(line_number, reason)
        self.line_number = line_number
        self.reason = reason

    def __str__(self):
        return f"line {self.line_number}: {self.reason}"


class InvariantViolationError(TokenPruningError):
    def __init__(self, doc_id, reason):
        super().__init__(doc_id, reason)
        self.doc_id = doc_id
        self.reason = reason

    def __str__(self):
        return f"document {self.doc_id!r}: {self.reason}"


class BadMagicError(TokenPruningError):
    pass


class TruncatedFileError(TokenPruningError):
    def __init__(self, doc_ordinal, reason):
        super().__init__(doc_ordinal, reason)
        self.doc_ordinal = doc_ordinal
        self.reason = reason

    def __str__(self):
        return f"truncated at document #{self.doc_ordinal}: {self.reason}"


class VersionUnsupportedError(TokenPruningError):
    pass


class PruningFailedError(TokenPruningError):
    """
    A single document failed while pruning a corpus.

    The constructor arguments are forwarded to Exception so the error
    pickles cleanly out of a worker process.
    """

    def __init__(self, doc_id, reason):
        super().__init__(doc_id, reason)
        self.doc_id = doc_id
        self.reason = reason

    def __str__(self):
        return f"pruning failed for document {self.doc_id!r}: {self.reason}"
