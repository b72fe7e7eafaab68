"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 1, a failed
eigenvalue bracket exits 2, plugin problems exit 3, and numerical
non-convergence exits 4.
"""


class QshootError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(QshootError):
    """Malformed config or manifest text; carries the offending line number."""

    def __init__(self, message, line=None):
        self.message = message
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


class DomainError(QshootError, ValueError):
    """Potential evaluated outside its mathematical domain (e.g. r <= 0)."""


class RangeError(QshootError, ValueError):
    """Tabulated potential queried outside the table; no extrapolation."""


class BracketError(QshootError):
    """No node-count transition found inside the energy scan window."""


class ConvergenceError(QshootError):
    """Iteration cap hit; carries the best state reached so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class FitError(QshootError):
    """Parameter fit failed structurally (e.g. singular Jacobian)."""


class PluginError(QshootError):
    """Base class for plugin-host failures."""


class ManifestError(PluginError, ConfigError):
    """Malformed plugin manifest."""


class PluginLoadError(PluginError):
    """Library could not be opened or a declared symbol is missing."""


class PluginShapeError(PluginError):
    """A call did not match the declared function shape."""


class PluginArityError(PluginShapeError):
    """Wrong number of input arrays."""


class PluginTypeError(PluginShapeError):
    """Input array has the wrong scalar type."""


class PluginLengthError(PluginShapeError):
    """Input array has the wrong length for the current shape."""


class PluginAdapterError(PluginError):
    """Plugin function shape is not usable as a potential."""
