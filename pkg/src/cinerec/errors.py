"""Exception hierarchy.

Everything raised on purpose by the package derives from ``CineRecError``.
``DataError`` marks problems with inputs (files, payloads, models) and maps
to exit code 2 in the CLI; ``UsageError`` maps to exit code 1.
"""


class CineRecError(Exception):
    """Base class for all package errors."""


class UsageError(CineRecError):
    pass


class DataError(CineRecError):
    pass


# catalog / ratings loading

class FileUnreadable(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class EmptyCatalog(DataError):
    pass


class EmptyRatings(DataError):
    pass


class MissingId(DataError):
    pass


class MissingTitle(DataError):
    pass


class IdentityMismatch(DataError):
    pass


# extraction

class NoJsonLdBlock(DataError):
    pass


class NotAMovieBlock(DataError):
    pass


class MalformedJson(DataError):
    def __init__(self, position, msg="malformed JSON"):
        super().__init__(f"{msg} at position {position}")
        self.position = position


class AnchorNotFound(DataError):
    pass


class MalformedPayload(DataError):
    pass


class MissingMoviesField(DataError):
    pass


class MissingDataPath(DataError):
    def __init__(self, path):
        super().__init__(f"missing data path: {path}")
        self.path = path


# fetching

class FetchError(DataError):
    pass


class NetworkDisabled(FetchError):
    pass


class RobotsDisallowed(FetchError):
    pass


class Timeout(FetchError):
    pass


class HttpError(FetchError):
    def __init__(self, status, url=""):
        super().__init__(f"HTTP {status} for {url}" if url else f"HTTP {status}")
        self.status = status
        self.url = url


class CacheWriteFailed(FetchError):
    pass


# models

class EmptyMatrix(DataError):
    pass


class DivergedTraining(DataError):
    pass


class UnknownUser(DataError):
    pass


class UnknownMovie(DataError):
    pass


class ColdStartUnresolvable(DataError):
    pass


class EmptyList(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptyTestSet(DataError):
    pass


# model artifact

class ArtifactError(DataError):
    pass


class BadMagic(ArtifactError):
    pass


class UnsupportedVersion(ArtifactError):
    pass


class TruncatedPayload(ArtifactError):
    pass


class ChecksumMismatch(ArtifactError):
    pass
