"""Exception hierarchy shared across the library and the CLI.

Every error carries a stable machine-readable ``code`` so that callers
(and the CLI's JSON error output) can dispatch without string matching.
"""


class CoteError(Exception):
    """Base class for all library errors."""

    code = "error"


class CanvasMismatchError(CoteError):
    """Two masks from different page canvases were combined; caller bug."""

    code = "canvas_mismatch"


class EmptyGroundTruthError(CoteError):
    """Page has no ground-truth area; metrics are undefined and the page is skipped."""

    code = "empty_ground_truth"


class SsuOverlapError(CoteError):
    """SSU masks overlap and the strict overlap policy is in force."""

    code = "ssu_overlap"


class DuplicateReadingOrderError(CoteError):
    """Two regions on one page share a reading_order_index."""

    code = "duplicate_reading_order"


class UnknownClassError(CoteError):
    """A class name is not part of the known class vocabulary."""

    code = "unknown_class"


class MissingClassError(CoteError):
    """A region or prediction lacks a class id where one is required."""

    code = "missing_class"


class FormatError(CoteError):
    """Input file could not be parsed or violates its schema."""

    code = "format_error"


class ConfigError(CoteError):
    """Invalid run configuration."""

    code = "config_error"
