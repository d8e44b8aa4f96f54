"""Exception hierarchy shared by the library and the command line."""


class DynlocError(Exception):
    """Base class for all errors raised by :mod:`dynloc`."""

    exit_code = 1


class ConfigError(DynlocError, ValueError):
    """Invalid input: bad parameters, unknown config keys, inconsistent values."""

    exit_code = 2


class TruncationError(DynlocError):
    """The finite lattice was too small: probability reached the far edge.

    Parameters
    ----------
    time : float
        Time at which the edge occupation first exceeded the limit.
    occupation : float
        The offending edge occupation ``|c_{N-1}|^2``.
    size : int
        Lattice size that was used.
    """

    exit_code = 3

    def __init__(self, time: float, occupation: float, size: int):
        self.time = float(time)
        self.occupation = float(occupation)
        self.size = int(size)
        super().__init__(
            f"edge occupation {occupation:.3e} exceeded the limit at t={time:.6g} "
            f"(N={size}); increase the truncation"
        )


class AccuracyError(DynlocError):
    """An integration result failed its accuracy certificate."""

    exit_code = 4


class OutputError(DynlocError):
    """A result file could not be written."""

    exit_code = 5
