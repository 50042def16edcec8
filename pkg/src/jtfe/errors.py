"""Exception types shared across the package."""


class JtfeError(Exception):
    """Base class for all package errors."""


class InvalidPronunciation(JtfeError):
    """A pronunciation string cannot be segmented into morae."""

    def __init__(self, char: str, offset: int):
        self.char = char
        self.offset = offset
        super().__init__(f"cannot segment {char!r} at offset {offset} into a mora")


class InvalidNucleus(JtfeError):
    """An accent nucleus position exceeds the mora count of its phrase."""


class CorpusFormatError(JtfeError):
    """Base for annotated-corpus parse errors; carries the offending line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingField(CorpusFormatError):
    pass


class LabelOutOfRange(CorpusFormatError):
    pass


class DanglingBoundary(CorpusFormatError):
    pass


class UnknownSentenceId(JtfeError):
    pass


class DimMismatch(JtfeError):
    pass


class BadMagic(JtfeError):
    pass


class EmptyRange(JtfeError):
    pass


class LookupBeforeFit(JtfeError):
    pass


class WidthMismatch(JtfeError):
    pass


class EmptySplit(JtfeError):
    pass


class VersionMismatch(JtfeError):
    pass


class Corrupt(JtfeError):
    pass


class UnknownLemma(JtfeError):
    pass


class SpanMismatch(JtfeError):
    pass


class AlignmentMismatch(JtfeError):
    pass


class LengthMismatch(JtfeError):
    pass
