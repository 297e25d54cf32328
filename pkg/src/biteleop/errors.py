"""Exception types shared across the stack.

The CLI maps these onto its exit-code contract: configuration problems
exit 2, unparseable input files exit 3, everything else that raises
exits 4.
"""


class TeleopError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(TeleopError):
    """Shape or chain-tag mismatch, or non-finite numeric input."""


class DegenerateGeometryError(TeleopError):
    """Geometry too degenerate to define a frame (collinear points)."""


class NoReliableViewError(TeleopError):
    """Both camera views are edge-on to the hand; weights undefined."""


class NoDetectionError(TeleopError):
    """Neither camera produced keypoints for the frame."""


class NotInitializedError(TeleopError):
    """Operation needs state that has not been established yet."""


class ConfigurationError(TeleopError):
    """Bad run configuration or empty/contradictory selection."""


class SessionParseError(TeleopError):
    """Malformed session log line; carries the 1-based line number."""

    def __init__(self, line_no, message):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no


class UnsupportedFormatError(TeleopError):
    """A versioned file declares a format this build does not support."""


class InsufficientDataError(TeleopError):
    """A metric needs more data than the log contains."""


class ProtocolError(TeleopError):
    """Bridge wire-protocol violation; carries the close reason code."""

    def __init__(self, reason, message=""):
        super().__init__(message or reason)
        self.reason = reason
