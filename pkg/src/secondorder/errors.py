"""Exception hierarchy.

``DataError`` covers malformed or inconsistent inputs, ``NumericError`` covers
failures during optimization.  The CLI maps them to exit codes 2 and 3.
"""


class SecondOrderError(Exception):
    pass


class DataError(SecondOrderError, ValueError):
    pass


class NumericError(SecondOrderError, ArithmeticError):
    pass


class IoFailure(DataError):
    pass


class MalformedHeader(DataError):
    pass


class DimensionMismatch(DataError):
    def __init__(self, line, expected=None, got=None):
        self.line = line
        msg = f"line {line}: dimension mismatch"
        if expected is not None:
            msg += f" (expected {expected} values, got {got})"
        super().__init__(msg)


class DuplicateToken(DataError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"duplicate token {token!r}")


class NonFiniteValue(DataError):
    def __init__(self, line):
        self.line = line
        super().__init__(f"line {line}: non-finite value")


class EmptySet(DataError):
    pass


class ZeroVector(DataError):
    def __init__(self, word_id=None):
        self.word_id = word_id
        super().__init__("zero vector" if word_id is None else f"zero vector at word id {word_id}")


class LengthMismatch(DataError):
    pass


class DimMismatch(DataError):
    pass


class UnknownWord(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class KZero(DataError):
    pass


class VocabMismatch(DataError):
    pass


class KMismatch(DataError):
    pass


class MalformedLine(DataError):
    def __init__(self, line, reason=""):
        self.line = line
        super().__init__(f"line {line}: malformed" + (f" ({reason})" if reason else ""))


class MalformedRow(MalformedLine):
    pass


class DanglingNode(DataError):
    pass


class EmptyVocabulary(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class VocabTooSmall(DataError):
    pass


class SingleClass(DataError):
    pass


class NonFiniteFeature(DataError):
    pass


class NonFiniteLoss(NumericError):
    pass
