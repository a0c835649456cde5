"""Error taxonomy shared by all engine modules.

Every error that can cross a module boundary derives from SoundtrailError so
the CLI and HTTP layers can map them to exit codes / status codes uniformly.
"""


class SoundtrailError(Exception):
    """Base class; `code` is the stable machine-readable identifier."""

    code = "internal_error"


class MalformedRiff(SoundtrailError):
    code = "malformed_riff"


class UnsupportedEncoding(SoundtrailError):
    code = "unsupported_encoding"


class EmptyClip(SoundtrailError):
    code = "empty_clip"


class TooShort(SoundtrailError):
    code = "too_short"


class DimensionMismatch(SoundtrailError):
    code = "dimension_mismatch"


class MissingGroup(SoundtrailError):
    code = "missing_group"


class UnknownSegment(SoundtrailError):
    code = "unknown_segment"


class UnknownDetector(SoundtrailError):
    code = "unknown_detector"


class InsufficientOverlap(SoundtrailError):
    code = "insufficient_overlap"


class UnknownVideo(SoundtrailError):
    code = "unknown_video"


class DuplicateVideo(SoundtrailError):
    code = "duplicate_video"


class CorruptLog(SoundtrailError):
    code = "corrupt_log"

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class SpecInvalid(SoundtrailError):
    code = "spec_invalid"


class NoInputs(SoundtrailError):
    code = "no_inputs"


class PortInUse(SoundtrailError):
    code = "port_in_use"


class DataDirLocked(SoundtrailError):
    code = "data_dir_locked"
