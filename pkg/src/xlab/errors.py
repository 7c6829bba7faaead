"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`XlabError` so the CLI can
map failures to a single runtime exit code.
"""


class XlabError(Exception):
    """Base class for all errors raised by xlab."""


class ShapeError(XlabError):
    """An array does not have the shape an operation requires."""


class FormatError(XlabError):
    """A binary artifact (IDX file, checkpoint, stimulus file) failed to parse."""


class DatasetError(XlabError):
    """A dataset is unknown, missing on disk, or internally inconsistent."""


class ConfigError(XlabError):
    """Invalid configuration value (bad rate, indivisible count, ...)."""


class PipelineError(XlabError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
