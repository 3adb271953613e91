"""Exception hierarchy shared by all modules."""


class UvTransferError(Exception):
    """Base class for every error raised by this package."""


class ObjParseError(UvTransferError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class CorrespondenceError(UvTransferError):
    pass


class DegenerateTriangleError(UvTransferError):
    pass


class ResolutionMismatchError(UvTransferError):
    pass


class CacheError(UvTransferError):
    pass


class CacheCorruptError(CacheError):
    """Bad magic, unsupported version, truncated file or checksum failure."""


class StaleCacheError(CacheError):
    """The file is intact but was built from different inputs."""
