"""Exception hierarchy shared by every corruptkit module."""


class CorruptkitError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CorruptkitError, ValueError):
    """An operator or config received an out-of-contract parameter."""


class ImageFormatError(CorruptkitError, ValueError):
    """Bytes could not be decoded as a supported image."""


class UndefinedMetricError(CorruptkitError, ValueError):
    """A metric is undefined for the given samples (e.g. a single class)."""


class ManifestError(CorruptkitError, ValueError):
    pass


class DetectorError(CorruptkitError, RuntimeError):
    """The external detector/transform process failed.

    ``partial`` holds the number of items answered before the failure.
    """

    def __init__(self, message, partial=0, cell=None):
        super().__init__(message)
        self.partial = partial
        self.cell = cell

    def __str__(self):
        msg = super().__str__()
        if self.cell is not None:
            msg = f"[cell {self.cell!r}] {msg}"
        return msg


class ProtocolError(DetectorError):
    """The external process violated the NDJSON wire protocol."""


class MergeError(CorruptkitError, ValueError):
    pass
