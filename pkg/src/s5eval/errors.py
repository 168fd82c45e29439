"""Exception types raised by s5eval.

Every error derives from :class:`S5EvalError` and from the closest builtin
(``ValueError``, ``OSError``) so callers can catch either.
"""


class S5EvalError(Exception):
    """Base class for all s5eval errors."""

    #: short machine-readable name used in CLI error records
    code = "error"


class LengthMismatch(S5EvalError, ValueError):
    code = "length_mismatch"


class SampleRateMismatch(LengthMismatch):
    code = "sample_rate_mismatch"


class SilentReference(S5EvalError, ValueError):
    code = "silent_reference"


class SizeLimit(S5EvalError, ValueError):
    code = "size_limit"


class DuplicateLabels(S5EvalError, ValueError):
    code = "duplicate_labels"


class CountMismatch(LengthMismatch):
    code = "count_mismatch"


class LabelMultisetMismatch(S5EvalError, ValueError):
    code = "label_multiset_mismatch"


class EmptyReference(S5EvalError, ValueError):
    code = "empty_reference"


class UnknownLabel(S5EvalError, ValueError):
    code = "unknown_label"


class UnsupportedFormat(S5EvalError, ValueError):
    code = "unsupported_format"


class CorruptFile(S5EvalError, ValueError):
    code = "corrupt_file"


class ChannelOutOfRange(S5EvalError, IndexError):
    code = "channel_out_of_range"


class ManifestError(S5EvalError, ValueError):
    code = "manifest_error"
