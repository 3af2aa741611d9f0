"""Exception hierarchy shared across the package."""


class CipgnavError(Exception):
    """Base class for all package-specific errors."""


class DegenerateQuaternionError(CipgnavError, ValueError):
    """Raised when a quaternion has (near-)zero norm and cannot be normalized."""


class ParseError(CipgnavError, ValueError):
    """Malformed CSV content.  Carries the 1-based line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class StreamOrderError(CipgnavError, ValueError):
    """Timestamps are not strictly increasing."""


class SyncGapError(CipgnavError, ValueError):
    """An epoch cannot be covered by all required sensor streams."""


class DivergenceError(CipgnavError, RuntimeError):
    """An iterative estimator produced a non-finite quantity.

    Attributes
    ----------
    iteration : int or None
        Inner-iteration index at which divergence was detected.
    stage : str or None
        Name of the estimator stage (for cascade estimators).
    epoch : float or None
        Timestamp of the offending epoch, when known.
    """

    def __init__(self, message, iteration=None, stage=None, epoch=None):
        self.iteration = iteration
        self.stage = stage
        self.epoch = epoch
        parts = [message]
        if stage is not None:
            parts.append(f"stage={stage}")
        if epoch is not None:
            parts.append(f"epoch t={epoch}")
        if iteration is not None:
            parts.append(f"inner iteration {iteration}")
        super().__init__(" / ".join(parts))


class AlignmentError(CipgnavError, ValueError):
    """Trajectory alignment is ill-conditioned (e.g. near-stationary window)."""


class SpecError(CipgnavError, ValueError):
    """Invalid scenario, adapter, or run configuration."""


class NumericalError(CipgnavError, RuntimeError):
    """A numerical guard tripped (non-finite entries, lost positive-definiteness)."""
