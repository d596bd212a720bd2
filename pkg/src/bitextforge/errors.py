"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes to distinct process exit statuses.
"""


class ForgeError(Exception):
    exit_code = 1


class MalformedLine(ForgeError):
    exit_code = 3


class InvalidUtf8(ForgeError):
    exit_code = 3


class MissingTokens(ForgeError):
    exit_code = 4


class EmptySide(ForgeError):
    exit_code = 4


class UnknownLanguage(ForgeError):
    exit_code = 5


class EmptyCorpus(ForgeError):
    exit_code = 6


class EmptyText(ForgeError):
    exit_code = 6


class EmptySentence(ForgeError):
    exit_code = 6


class EmptyBitext(ForgeError):
    exit_code = 6


class VocabTooSmall(ForgeError):
    exit_code = 7


class UnknownID(ForgeError):
    exit_code = 7


class PositionOutOfRange(ForgeError):
    exit_code = 8


class DimensionMismatch(ForgeError):
    exit_code = 9


class MissingForwardCache(ForgeError):
    exit_code = 9


class ConfigInvalid(ForgeError):
    exit_code = 10


class InputMissing(ForgeError):
    exit_code = 11


class StageFailed(ForgeError):
    exit_code = 12

    def __init__(self, name, cause):
        super().__init__(f"stage {name!r} failed: {cause}")
        self.name = name
        self.cause = cause


class OrderTooLarge(UserWarning):
    """Raised as a warning: n-gram order longer than any training sentence."""
